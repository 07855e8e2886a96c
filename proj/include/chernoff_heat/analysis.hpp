#pragma once

// Error metrics, convergence studies and the asymptotic-relation checks.
//
// Every check produces a CheckReport whose pass flag is a pure function of the
// recorded series and their rules; recompute_pass() re-derives it.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chernoff_heat/chernoff.hpp"
#include "chernoff_heat/errors.hpp"
#include "chernoff_heat/kernels.hpp"
#include "chernoff_heat/manifold.hpp"
#include "chernoff_heat/quadrature.hpp"

namespace chernoff_heat {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

namespace detail {
inline void require_same_grid(const KernelMatrix& a, const KernelMatrix& b, const char* what) {
  if (a.quadrature_ptr() != b.quadrature_ptr() || a.rows().rows != b.rows().rows) {
    throw InvalidArgument(std::string(what) + ": matrices live on different grids or row sets");
  }
}
}  // namespace detail

/// max |A - B| over the stored entries.
inline double sup_error(const KernelMatrix& a, const KernelMatrix& b) {
  detail::require_same_grid(a, b, "sup_error");
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

/// L^2(M x M) distance under the quadrature, with stored rows weighted by
/// their orbit multiplicity.
inline double weighted_l2_error(const KernelMatrix& a, const KernelMatrix& b) {
  detail::require_same_grid(a, b, "weighted_l2_error");
  const auto& w = a.quadrature().weight_vector();
  const Eigen::VectorXd per_row = (a.values() - b.values()).array().square().matrix() * w;
  double total = 0.0;
  for (std::size_t r = 0; r < a.rows().size(); ++r) {
    total += a.rows().multiplicity[r] * w[a.rows().rows[r]] * per_row[static_cast<Eigen::Index>(r)];
  }
  return std::sqrt(total);
}

// ---------------------------------------------------------------------------
// Order estimation
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  std::string label;  // "n=8", "delta=0.001", ...
  std::size_t steps = 0;
  double mesh = 0.0;
  double min_gap = 0.0;
  double sup_error = 0.0;
  double l2_error = 0.0;
  double wall_time = 0.0;  // seconds; reported outside the deterministic payload
};

/// Least-squares slope of log(sup_error) against log(mesh). Rows with a zero
/// error are dropped; at least three rows with distinct mesh must remain.
inline double estimate_order(const std::vector<ConvergenceRow>& rows) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& r : rows) {
    if (r.sup_error == 0.0) continue;
    if (!(r.mesh > 0.0) || !(r.sup_error > 0.0)) throw InvalidArgument("estimate_order: mesh and error must be positive");
    lx.push_back(std::log(r.mesh));
    ly.push_back(std::log(r.sup_error));
  }
  std::vector<double> distinct = lx;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw InvalidArgument("estimate_order: need at least 3 rows with distinct mesh");
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct PartitionFamily {
  std::string kind;  // uniform | random | dominant-last
  std::vector<std::string> labels;
  std::vector<Partition> partitions;
};

inline PartitionFamily uniform_family(double t, const std::vector<int>& ns) {
  PartitionFamily f{"uniform", {}, {}};
  for (int n : ns) {
    f.labels.push_back("n=" + std::to_string(n));
    f.partitions.push_back(uniform_partition(t, n));
  }
  return f;
}

inline PartitionFamily random_family(double t, const std::vector<int>& ns, int k, std::uint64_t seed) {
  PartitionFamily f{"random", {}, {}};
  for (std::size_t i = 0; i < ns.size(); ++i) {
    f.labels.push_back("n=" + std::to_string(ns[i]));
    f.partitions.push_back(random_min_gap_partition(t, ns[i], k, seed + i));
  }
  return f;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline PartitionFamily dominant_family(double t, const std::vector<double>& deltas, int d) {
  PartitionFamily f{"dominant-last", {}, {}};
  for (double delta : deltas) {
    f.labels.push_back("delta=" + format_number(delta));
    f.partitions.push_back(dominant_last_step_partition(t, delta, d));
  }
  return f;
}

struct StudyOptions {
  HeatSeriesParams series{};
  BandwidthGuard guard{};
  /// Grids larger than this use orbit-representative rows for the sup.
  Eigen::Index max_full_rows = 4096;
};

struct ConvergenceReport {
  std::string manifold;
  std::array<double, 2> radii{};
  double t = 0.0;
  int level = 0;
  std::string family;
  std::size_t rows_evaluated = 0;
  std::vector<ConvergenceRow> rows;
  double estimated_order = std::numeric_limits<double>::quiet_NaN();
};

/// One report per level; each row compares q_P with h(., ., t) on the grid.
inline std::vector<ConvergenceReport> convergence_study(const EmbeddedManifold& m, double t,
                                                        const PartitionFamily& family, const std::vector<int>& levels,
                                                        const StudyOptions& opts = {}) {
  std::vector<ConvergenceReport> out;
  for (int level : levels) {
    ConvergenceReport rep;
    rep.manifold = std::string(m.name());
    rep.radii = m.radii();
    rep.t = t;
    rep.level = level;
    rep.family = family.kind;

    const auto quad = make_quadrature(m, level);
    const auto rows = quad->rows_for_sup(opts.max_full_rows);
    rep.rows_evaluated = rows.size();
    const auto h = build_kernel_rows(KernelKind::H, t, quad, rows, opts.series, opts.guard);

    for (std::size_t i = 0; i < family.partitions.size(); ++i) {
      const auto& p = family.partitions[i];
      if (std::abs(p.final_time() - t) > 1e-12 * t) {
        throw CellError("study cell (level " + std::to_string(level) + ", " + family.labels[i] +
                        "): partition does not end at t");
      }
      const auto start = std::chrono::steady_clock::now();
      ConvergenceRow row;
      row.label = family.labels[i];
      row.steps = p.size();
      row.mesh = p.mesh();
      row.min_gap = p.min_gap();
      try {
        const auto chain = compose_chain_rows(p, quad, rows, opts.guard);
        row.sup_error = sup_error(chain, h);
        row.l2_error = weighted_l2_error(chain, h);
      } catch (const std::exception& e) {
        throw CellError("study cell (level " + std::to_string(level) + ", " + family.labels[i] + "): " + e.what());
      }
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      rep.rows.push_back(std::move(row));
    }
    std::stable_sort(rep.rows.begin(), rep.rows.end(),
                     [](const ConvergenceRow& a, const ConvergenceRow& b) { return a.mesh > b.mesh; });
    if (!rep.rows.empty()) {
      const double cutoff = rep.rows.front().mesh / 2.0;
      std::vector<ConvergenceRow> asymptotic;
      for (const auto& r : rep.rows) {
        if (r.mesh <= cutoff) asymptotic.push_back(r);
      }
      try {
        rep.estimated_order = estimate_order(asymptotic);
      } catch (const InvalidArgument&) {
        rep.estimated_order = std::numeric_limits<double>::quiet_NaN();
      }
    }
    out.push_back(std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Check reports
// ---------------------------------------------------------------------------

enum class RuleKind {
  record_only,           // informational, always passes
  bounded_by_median,     // max <= a * median
  strictly_decreasing,   // v[i+1] < v[i]
  decreasing_and_halved, // strictly decreasing and last < first / 2
  max_at_most,           // max <= a
  within_band,           // a <= v <= b for every value
};

inline std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::record_only: return "record_only";
    case RuleKind::bounded_by_median: return "bounded_by_median";
    case RuleKind::strictly_decreasing: return "strictly_decreasing";
    case RuleKind::decreasing_and_halved: return "decreasing_and_halved";
    case RuleKind::max_at_most: return "max_at_most";
    case RuleKind::within_band: return "within_band";
  }
  return "?";
}

struct Rule {
  RuleKind kind = RuleKind::record_only;
  double a = 0.0;
  double b = 0.0;
};

struct CheckSeries {
  std::string name;
  std::vector<double> values;  // one per sweep point
  std::vector<bool> skipped;   // sweep points with no admissible data
  Rule rule;
  bool pass = true;
};

struct CheckReport {
  std::string check_name;
  std::string manifold;
  std::string sweep_name;
  std::vector<double> sweep;
  std::map<std::string, double> parameters;
  std::vector<CheckSeries> series;
  std::vector<std::string> notes;
  bool pass = true;

  const CheckSeries& get(const std::string& name) const {
    for (const auto& s : series) {
      if (s.name == name) return s;
    }
    throw InvalidArgument("CheckReport " + check_name + " has no series '" + name + "'");
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline bool evaluate_rule(const Rule& rule, const std::vector<double>& values, const std::vector<bool>& skipped) {
  std::vector<double> v;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i < skipped.size() && skipped[i]) continue;
    v.push_back(values[i]);
  }
  const auto all_finite = std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  switch (rule.kind) {
    case RuleKind::record_only:
      return true;
    case RuleKind::bounded_by_median:
      return !v.empty() && all_finite && *std::max_element(v.begin(), v.end()) <= rule.a * median(v);
    case RuleKind::strictly_decreasing:
    case RuleKind::decreasing_and_halved: {
      if (v.size() < 2 || !all_finite) return false;
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] < v[i - 1])) return false;
      }
      return rule.kind == RuleKind::strictly_decreasing || v.back() < v.front() / 2.0;
    }
    case RuleKind::max_at_most:
      return !v.empty() && all_finite && *std::max_element(v.begin(), v.end()) <= rule.a;
    case RuleKind::within_band:
      return !v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x >= rule.a && x <= rule.b; });
  }
  return false;
}

inline bool recompute_pass(const CheckReport& r) {
  return std::all_of(r.series.begin(), r.series.end(),
                     [](const CheckSeries& s) { return evaluate_rule(s.rule, s.values, s.skipped); });
}

namespace detail {
inline void finalize(CheckReport& r) {
  for (auto& s : r.series) {
    if (s.skipped.size() < s.values.size()) s.skipped.resize(s.values.size(), false);
    s.pass = evaluate_rule(s.rule, s.values, s.skipped);
  }
  r.pass = recompute_pass(r);
}

inline void require_alpha(double alpha) {
  if (!(alpha > 0.25 && alpha < 0.5)) throw InvalidArgument("alpha must lie in (1/4, 1/2)");
}

inline void require_times(const std::vector<double>& ts, const char* what) {
  if (ts.empty()) throw InvalidArgument(std::string(what) + ": empty sweep");
  for (double t : ts) require_positive_time(t, what);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Near-diagonal relations between q, p, E and h
// ---------------------------------------------------------------------------

struct Lemma1Options {
  HeatSeriesParams series{};
  BandwidthGuard guard{};
  Eigen::Index max_full_rows = 4096;
  /// |ratio - 1| below this is rounding noise and is recorded as 0.
  double residual_floor = 16.0 * std::numeric_limits<double>::epsilon();
  double median_factor = 2.0;
};

/// Empirical sup constants
///   (1st) |q/p - 1| / t            over all pairs
///   (2nd) |p/E - 1| / t^{4a-1}     over pairs with |x - y| < t^a
///   (3rd) |E/h - 1| / t^{2a}
///   (4th) |q/h - 1| / t^{4a-1}
///   (5th) |h/p - 1| / t^{4a-1}
/// each required to stay bounded (max <= 2 x median) across the t sweep.
inline CheckReport lemma1_sweep(const QuadraturePtr& quad, const std::vector<double>& t_values, double alpha,
                                const Lemma1Options& opts = {}) {
  if (!quad) throw InvalidArgument("lemma1_sweep: null quadrature");
  detail::require_alpha(alpha);
  detail::require_times(t_values, "lemma1_sweep");
  const double t_min = *std::min_element(t_values.begin(), t_values.end());
  require_bandwidth(*quad, t_min, opts.guard, "lemma1_sweep");
  opts.series.validate();

  const auto& q = *quad;
  const auto& m = q.manifold();
  const int d = m.intrinsic_dim();
  const auto rows = q.rows_for_sup(opts.max_full_rows);
  const Eigen::Index n = q.size();

  CheckReport rep;
  rep.check_name = "lemma1";
  rep.manifold = std::string(m.name());
  rep.sweep_name = "t";
  rep.sweep = t_values;
  rep.parameters = {{"alpha", alpha}, {"level", q.level()}, {"residual_floor", opts.residual_floor},
                    {"rows_evaluated", static_cast<double>(rows.size())}};

  const std::array<std::string, 5> names = {"theta1", "theta2", "theta3", "theta4", "theta5"};
  std::array<CheckSeries, 5> rel;
  for (std::size_t k = 0; k < 5; ++k) rel[k] = CheckSeries{names[k], {}, {}, Rule{RuleKind::bounded_by_median, opts.median_factor}, true};
  CheckSeries pairs{"admissible_pairs", {}, {}, Rule{}, true};

  const double e1 = 4.0 * alpha - 1.0;
  const double e3 = 2.0 * alpha;
  auto residual = [&](double ratio) {
    const double r = std::abs(ratio - 1.0);
    return r < opts.residual_floor ? 0.0 : r;
  };

  for (double t : t_values) {
    const HeatKernel h(m, t, opts.series);
    const double pre = detail::gaussian_prefactor(t, d);
    const double radius = std::pow(t, alpha);
    std::array<double, 5> sup{};
    std::size_t admissible = 0;
    std::vector<double> g(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& x = q.node(rows.rows[r]);
      const double z = detail::gaussian_row(q, x.ambient_data(), t, g.data());
      for (Eigen::Index j = 0; j < n; ++j) {
        const double gj = g[static_cast<std::size_t>(j)];
        const double pv = pre * gj;
        if (pv > 0.0) sup[0] = std::max(sup[0], residual((gj / z) / pv) / t);
        const auto& y = q.node(j);
        const double chord = std::sqrt(m.chordal_distance_sq(x.ambient_data(), y.ambient_data()));
        if (!(chord < radius)) continue;
        if (j != rows.rows[r]) ++admissible;
        const double geo = m.geodesic_distance(x, y);
        const double ev = pre * std::exp(-geo * geo / (2.0 * t));
        const double hv = h.eval_raw(x, y);
        const double qv = gj / z;
        sup[1] = std::max(sup[1], residual(pv / ev) / std::pow(t, e1));
        sup[2] = std::max(sup[2], residual(ev / hv) / std::pow(t, e3));
        sup[3] = std::max(sup[3], residual(qv / hv) / std::pow(t, e1));
        sup[4] = std::max(sup[4], residual(hv / pv) / std::pow(t, e1));
      }
    }
    rel[0].values.push_back(sup[0]);
    rel[0].skipped.push_back(false);
    for (std::size_t k = 1; k < 5; ++k) {
      rel[k].values.push_back(sup[k]);
      rel[k].skipped.push_back(admissible == 0);
    }
    pairs.values.push_back(static_cast<double>(admissible));
  }
  for (auto& s : rel) rep.series.push_back(std::move(s));
  rep.series.push_back(std::move(pairs));
  detail::finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// One-step composition of q with h
// ---------------------------------------------------------------------------

struct Lemma2Options {
  HeatSeriesParams series{};
  BandwidthGuard guard{};
  Eigen::Index max_full_rows = 4096;
  double median_factor = 2.0;
  double control_tolerance = 1e-8;
};

/// Residual sup |int q(x,y,t1) h(y,z,t2) dy - h(x,z,t1+t2)| normalized by
/// t1^{4a-1} sup h(., ., t1+t2), plus the control run with h(., ., t1) in
/// place of q (pure Chapman-Kolmogorov).
inline CheckReport lemma2_check(const QuadraturePtr& quad, const std::vector<double>& t1_values, double t2,
                                double alpha, const Lemma2Options& opts = {}) {
  if (!quad) throw InvalidArgument("lemma2_check: null quadrature");
  detail::require_alpha(alpha);
  detail::require_times(t1_values, "lemma2_check");
  detail::require_positive_time(t2, "lemma2_check");
  require_bandwidth(*quad, *std::min_element(t1_values.begin(), t1_values.end()), opts.guard, "lemma2_check");

  const auto rows = quad->rows_for_sup(opts.max_full_rows);
  const auto h2 = build_kernel_matrix(KernelKind::H, t2, quad, opts.series);

  CheckReport rep;
  rep.check_name = "lemma2";
  rep.manifold = std::string(quad->manifold().name());
  rep.sweep_name = "t1";
  rep.sweep = t1_values;
  rep.parameters = {{"alpha", alpha}, {"t2", t2}, {"level", quad->level()},
                    {"control_tolerance", opts.control_tolerance}};
  CheckSeries normalized{"normalized_residual", {}, {}, Rule{RuleKind::bounded_by_median, opts.median_factor}, true};
  CheckSeries control{"control_residual", {}, {}, Rule{RuleKind::max_at_most, opts.control_tolerance}, true};
  CheckSeries raw{"residual", {}, {}, Rule{}, true};
  CheckSeries suph{"sup_h", {}, {}, Rule{}, true};

  for (double t1 : t1_values) {
    const auto target = build_kernel_rows(KernelKind::H, t1 + t2, quad, rows, opts.series);
    const auto qrows = build_kernel_rows(KernelKind::Q, t1, quad, rows, opts.series, opts.guard);
    const auto hrows = build_kernel_rows(KernelKind::H, t1, quad, rows, opts.series);
    const double res = sup_error(compose(qrows, h2), target);
    const double ctl = sup_error(compose(hrows, h2), target);
    const double sh = target.values().maxCoeff();
    raw.values.push_back(res);
    suph.values.push_back(sh);
    normalized.values.push_back(res / (std::pow(t1, 4.0 * alpha - 1.0) * sh));
    control.values.push_back(ctl);
  }
  rep.series = {std::move(normalized), std::move(control), std::move(raw), std::move(suph)};
  rep.notes.push_back("exponential tail term not isolated; normalization uses the polynomial term only");
  detail::finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Dominant last step
// ---------------------------------------------------------------------------

struct Lemma3Options {
  HeatSeriesParams series{};
  BandwidthGuard guard{};
  Eigen::Index max_full_rows = 4096;
};

/// For each delta: the chain over [0, t - tau] applied to p(., y, tau) and to
/// h(., y, tau) for every grid y, compared with h(., y, t). Both sup errors
/// must decrease strictly along the delta sweep.
inline CheckReport lemma3_check(const QuadraturePtr& quad, double t, const std::vector<double>& deltas,
                                const Lemma3Options& opts = {}) {
  if (!quad) throw InvalidArgument("lemma3_check: null quadrature");
  detail::require_positive_time(t, "lemma3_check");
  if (deltas.empty()) throw InvalidArgument("lemma3_check: empty delta sweep");
  const int d = quad->manifold().intrinsic_dim();

  // every partition is validated before any matrix work
  std::vector<Partition> parts;
  for (double delta : deltas) parts.push_back(dominant_last_step_partition(t, delta, d));

  const auto rows = quad->rows_for_sup(opts.max_full_rows);
  const auto target = build_kernel_rows(KernelKind::H, t, quad, rows, opts.series);

  CheckReport rep;
  rep.check_name = "lemma3";
  rep.manifold = std::string(quad->manifold().name());
  rep.sweep_name = "delta";
  rep.sweep = deltas;
  rep.parameters = {{"t", t}, {"level", quad->level()}, {"d", d}};
  CheckSeries perr{"p_variant_sup_error", {}, {}, Rule{RuleKind::strictly_decreasing}, true};
  CheckSeries herr{"h_variant_sup_error", {}, {}, Rule{RuleKind::strictly_decreasing}, true};
  CheckSeries taus{"tau", {}, {}, Rule{}, true};
  CheckSeries gap{"p_h_relative_gap", {}, {}, Rule{}, true};
  CheckSeries nsteps{"head_steps", {}, {}, Rule{}, true};

  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    const double tau = dominant_last_step(deltas[i], d);
    std::vector<double> head_times(p.times().begin(), p.times().end() - 1);
    const Partition head(std::move(head_times));
    try {
      const auto chain = compose_chain_rows(head, quad, rows, opts.guard);
      const auto pmat = build_kernel_matrix(KernelKind::P, tau, quad, opts.series, opts.guard);
      const auto hmat = build_kernel_matrix(KernelKind::H, tau, quad, opts.series);
      // p and h are symmetric, so column y of each matrix is the grid function of y
      const Eigen::MatrixXd via_p = apply_chain(chain, pmat.values());
      const Eigen::MatrixXd via_h = apply_chain(chain, hmat.values());
      const double ep = (via_p - target.values()).cwiseAbs().maxCoeff();
      const double eh = (via_h - target.values()).cwiseAbs().maxCoeff();
      perr.values.push_back(ep);
      herr.values.push_back(eh);
      gap.values.push_back((via_p - via_h).cwiseAbs().maxCoeff() / target.values().maxCoeff());
    } catch (const std::exception& e) {
      throw CellError("lemma3 cell (delta = " + format_number(deltas[i]) + "): " + e.what());
    }
    taus.values.push_back(tau);
    nsteps.values.push_back(static_cast<double>(head.size()));
  }
  rep.series = {std::move(perr), std::move(herr), std::move(taus), std::move(gap), std::move(nsteps)};
  detail::finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Sums of powers of step lengths
// ---------------------------------------------------------------------------

/// Family for the power-sum check: partitions of [0, tau_n] with
/// tau_n = (K / (2n))^{1/(p-1)}, so tau^p < K max(step) holds for every n.
inline PartitionFamily power_sum_family(const std::string& kind, const std::vector<int>& ns, double p, double K,
                                        int k = 2, std::uint64_t seed = 0) {
  if (!(p > 1.0)) throw InvalidArgument("power_sum_family: p must exceed 1");
  if (!(K > 0.0)) throw InvalidArgument("power_sum_family: K must be positive");
  PartitionFamily f{kind, {}, {}};
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const int n = ns[i];
    const double tau = std::pow(K / (2.0 * n), 1.0 / (p - 1.0));
    f.labels.push_back("n=" + std::to_string(n));
    if (kind == "uniform") {
      f.partitions.push_back(uniform_partition(tau, n));
    } else if (kind == "random") {
      f.partitions.push_back(random_min_gap_partition(tau, n, k, seed + i));
    } else {
      throw InvalidArgument("power_sum_family: kind must be uniform or random");
    }
  }
  return f;
}

struct Lemma4Hypothesis {
  double p = 2.0;  // tau^p < K max(step)
  double K = 1.0;
  int q = 2;       // min(step) > max(step)^q
};

/// S = sum_i (t_i - t_{i-1})^{1-x} must decrease along the family and end
/// below half its first value. For uniform families S is also compared with
/// n (tau/n)^{1-x}.
inline CheckReport lemma4_check(const PartitionFamily& family, double x_exponent, const Lemma4Hypothesis& hyp = {},
                                double closed_form_tolerance = 1e-12) {
  if (family.partitions.empty()) throw InvalidArgument("lemma4_check: empty family");
  if (!(x_exponent > 0.0 && x_exponent < 1.0 / (hyp.p * hyp.q))) {
    throw InvalidArgument("lemma4_check: x must lie in (0, 1/(p q)) = (0, " + format_number(1.0 / (hyp.p * hyp.q)) + ")");
  }
  for (std::size_t i = 0; i < family.partitions.size(); ++i) {
    const auto& part = family.partitions[i];
    if (!part.satisfies_min_gap(hyp.q)) {
      throw InvalidArgument("lemma4_check: partition " + family.labels[i] + " violates min_gap > mesh^" +
                            std::to_string(hyp.q));
    }
    if (!(std::pow(part.final_time(), hyp.p) < hyp.K * part.mesh())) {
      throw InvalidArgument("lemma4_check: partition " + family.labels[i] + " violates tau^p < K mesh");
    }
  }

  CheckReport rep;
  rep.check_name = "lemma4";
  rep.sweep_name = "n";
  rep.parameters = {{"x", x_exponent}, {"p", hyp.p}, {"K", hyp.K}, {"q", hyp.q}};
  CheckSeries sums{"power_sum", {}, {}, Rule{RuleKind::decreasing_and_halved}, true};
  CheckSeries closed{"closed_form_defect", {}, {}, Rule{RuleKind::max_at_most, closed_form_tolerance}, true};
  CheckSeries mesh{"mesh", {}, {}, Rule{}, true};
  for (const auto& part : family.partitions) {
    double s = 0.0;
    for (double dt : part.steps()) s += std::pow(dt, 1.0 - x_exponent);
    const double n = static_cast<double>(part.size());
    rep.sweep.push_back(n);
    sums.values.push_back(s);
    mesh.values.push_back(part.mesh());
    closed.values.push_back(std::abs(s - n * std::pow(part.final_time() / n, 1.0 - x_exponent)));
  }
  rep.series.push_back(std::move(sums));
  if (family.kind == "uniform") rep.series.push_back(std::move(closed));
  rep.series.push_back(std::move(mesh));
  detail::finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Small-t expansion of the normalizer
// ---------------------------------------------------------------------------

/// residual(t) / residual(t/2) for each t; the band [lo, hi] brackets the
/// ratio 2^{3/2} of a t^{3/2} residual.
inline CheckReport expansion_check(const QuadraturePtr& quad, const ManifoldPoint& x, const std::vector<double>& t_values,
                                   double band_lo = 2.2, double band_hi = 3.5, const BandwidthGuard& guard = {}) {
  if (!quad) throw InvalidArgument("expansion_check: null quadrature");
  detail::require_times(t_values, "expansion_check");
  CheckReport rep;
  rep.check_name = "expansion";
  rep.manifold = std::string(quad->manifold().name());
  rep.sweep_name = "t";
  rep.sweep = t_values;
  rep.parameters = {{"level", quad->level()}, {"band_lo", band_lo}, {"band_hi", band_hi}};
  CheckSeries ratio{"ratio", {}, {}, Rule{RuleKind::within_band, band_lo, band_hi}, true};
  CheckSeries res{"residual", {}, {}, Rule{}, true};
  CheckSeries res_half{"residual_half", {}, {}, Rule{}, true};
  CheckSeries scaled{"residual_over_t32", {}, {}, Rule{}, true};
  for (double t : t_values) {
    const double r = normalizer_expansion_residual(x, t, *quad, guard);
    const double rh = normalizer_expansion_residual(x, t / 2.0, *quad, guard);
    res.values.push_back(r);
    res_half.values.push_back(rh);
    ratio.values.push_back(r / rh);
    scaled.values.push_back(std::abs(r) / std::pow(t, 1.5));
  }
  rep.series = {std::move(ratio), std::move(res), std::move(res_half), std::move(scaled)};
  detail::finalize(rep);
  return rep;
}

}  // namespace chernoff_heat
