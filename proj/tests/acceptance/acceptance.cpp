// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "chernoff_heat/cli.hpp"

using namespace chernoff_heat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double time_limit, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > time_limit) {
    o.pass = false;
    o.detail += "; runtime " + format_number(secs) + " s exceeds " + format_number(time_limit) + " s";
  }
  if (!o.pass) ++failures;
  std::printf("%s  %d  %-34s  %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Smallest level whose grid resolves time step t under the default guard.
int level_for(const EmbeddedManifold& m, double t) {
  return check_bandwidth(*make_quadrature(m, 1), t).min_level;
}

std::string series_summary(const CheckReport& r) {
  std::string s;
  for (const auto& c : r.series) {
    if (c.rule.kind == RuleKind::record_only) continue;
    s += c.name + (c.pass ? "" : "(fail)") + "=[";
    for (std::size_t i = 0; i < c.values.size(); ++i) s += (i ? "," : "") + fmt(c.values[i]);
    s += "] ";
  }
  return s;
}

bool strictly_decreasing(const std::vector<ConvergenceRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].sup_error < rows[i - 1].sup_error)) return false;
  return true;
}

std::string errors(const std::vector<ConvergenceRow>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.label + ":" + fmt(r.sup_error) + " ";
  return s;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const auto circle = EmbeddedManifold::circle();
  const auto sphere = EmbeddedManifold::sphere();

  criterion(1, "row sums of Q and chains", 10, [&] {
    const auto quad = make_quadrature(circle, 9);
    double q_defect = 0.0, chain_defect = 0.0;
    int chains = 0;
    for (double t : {0.01, 0.05, 0.1, 0.5, 1.0}) {
      q_defect = std::max(q_defect, build_kernel_matrix(KernelKind::Q, t, quad).max_row_sum_defect());
      for (int n : {2, 4, 8, 16, 32, 64}) {
        if (!check_bandwidth(*quad, t / n).ok) continue;
        chain_defect = std::max(chain_defect, compose_chain(uniform_partition(t, n), quad).matrix.max_row_sum_defect());
        ++chains;
      }
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto p = random_min_gap_partition(t, 4, 2, seed);
        if (!check_bandwidth(*quad, p.min_gap()).ok) continue;
        chain_defect = std::max(chain_defect, compose_chain(p, quad).matrix.max_row_sum_defect());
        ++chains;
      }
    }
    return Outcome{q_defect <= 1e-12 && chain_defect <= 1e-10,
                   "Q defect " + fmt(q_defect) + ", chain defect " + fmt(chain_defect) + " over " +
                       std::to_string(chains) + " chains"};
  });

  criterion(2, "reference heat kernel agreement", 30, [&] {
    const double L = 2 * std::numbers::pi;
    double diff = 0.0;
    for (double t : {0.05, 0.2, 0.5, 2.0})
      for (int i = 0; i <= 400; ++i) {
        const double s = L / 2 * i / 400.0;
        diff = std::max(diff, std::abs(circle_heat_wrapped(s, t, L) - circle_heat_eigen(s, t, L)));
      }
    const auto quad = make_quadrature(circle, 9);
    const auto composed = compose(build_kernel_matrix(KernelKind::H, 0.1, quad), build_kernel_matrix(KernelKind::H, 0.25, quad));
    const double ck = sup_error(composed, build_kernel_matrix(KernelKind::H, 0.35, quad));
    return Outcome{diff <= 1e-12 && ck <= 1e-8, "wrapped vs eigen " + fmt(diff) + ", semigroup residual " + fmt(ck)};
  });

  criterion(3, "uniform chains converge (circle)", 120, [&] {
    const auto fam = uniform_family(0.5, {2, 4, 8, 16, 32, 64});
    const auto reps = convergence_study(circle, 0.5, fam, {9, 10});
    const auto& a = reps[0].rows;
    const auto& b = reps[1].rows;
    double rel = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) rel = std::max(rel, std::abs(b[i].sup_error - a[i].sup_error) / a[i].sup_error);
    const bool ok = strictly_decreasing(a) && a.back().sup_error <= a.front().sup_error / 4 && rel < 0.01;
    return Outcome{ok, errors(a) + "level-10 change " + fmt(rel) + ", order " + fmt(reps[0].estimated_order)};
  });

  criterion(3, "uniform chains converge (sphere)", 600, [&] {
    // 64 x 128 grid; n = 16 needs 3.5 nodes per standard deviation
    StudyOptions o;
    o.guard = BandwidthGuard{3.5};
    const auto reps = convergence_study(sphere, 0.5, uniform_family(0.5, {2, 4, 8, 16}), {6}, o);
    const auto& a = reps[0].rows;
    return Outcome{strictly_decreasing(a), errors(a)};
  });

  criterion(4, "near-diagonal constants bounded", 120, [&] {
    const std::vector<double> ts{0.16, 0.08, 0.04, 0.02};
    std::string detail;
    bool ok = true;
    for (const auto& m : {circle, sphere}) {
      const int level = level_for(m, 0.02);
      const auto rep = lemma1_sweep(make_quadrature(m, level), ts, 0.45);
      ok = ok && rep.pass;
      detail += std::string(m.name()) + " level " + std::to_string(level) + ": " + series_summary(rep);
    }
    return Outcome{ok, detail};
  });

  criterion(5, "one-step semigroup residual", 60, [&] {
    const auto rep = lemma2_check(make_quadrature(circle, 9), {0.08, 0.04, 0.02}, 0.25, 0.45);
    return Outcome{rep.pass, series_summary(rep)};
  });

  criterion(6, "dominant last step", 120, [&] {
    const std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    const auto rep = lemma3_check(make_quadrature(circle, level_for(circle, deltas.back())), 0.5, deltas);
    return Outcome{rep.pass, series_summary(rep)};
  });

  criterion(7, "power sums of step lengths", 1, [&] {
    bool ok = true;
    std::string detail;
    for (const std::string kind : {"uniform", "random"}) {
      const auto rep = lemma4_check(power_sum_family(kind, {4, 16, 64, 256}, 2.0, 1.0, 2, 42), 0.1);
      ok = ok && rep.pass;
      detail += kind + ": " + series_summary(rep);
    }
    return Outcome{ok, detail};
  });

  criterion(8, "normalizer expansion order", 30, [&] {
    const auto quad = make_quadrature(sphere, level_for(sphere, 0.005));
    const auto rep = expansion_check(quad, quad->node(0), {0.02, 0.01});
    return Outcome{rep.pass, "level " + std::to_string(quad->level()) + ", " + series_summary(rep)};
  });

  criterion(9, "reproducible study report", 600, [&] {
    RunConfig c;
    c.out = (std::filesystem::temp_directory_path() / "chernoff_heat_acceptance_study").string();
    std::ostringstream log;
    std::string first;
    for (int run = 0; run < 2; ++run) {
      if (run_study(c, log) != exit_ok) return Outcome{false, "study run failed"};
      const auto text = strip_sidecar(Json::parse(slurp(c.out + ".json"))).dump(2);
      if (run == 0) first = text;
      else return Outcome{text == first, text == first ? "identical reports" : "reports differ"};
    }
    return Outcome{};
  });

  // Informational: with t = 1.0 every tau fits and both variants can be observed.
  try {
    const auto rep = lemma3_check(make_quadrature(circle, 10), 1.0, {1e-2, 1e-3});
    std::printf("note   dominant last step at t = 1.0, deltas {1e-2, 1e-3}: %s\n", series_summary(rep).c_str());
  } catch (const std::exception& e) {
    std::printf("note   dominant last step at t = 1.0: error: %s\n", e.what());
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
