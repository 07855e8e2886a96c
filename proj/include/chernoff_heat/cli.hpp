#pragma once

// Configuration, subcommand dispatch and report files for the command-line tool.
// Argument parsing itself lives in tools/; everything here works on a
// validated RunConfig so it can be driven from tests.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chernoff_heat/analysis.hpp"
#include "chernoff_heat/parallel.hpp"
#include "chernoff_heat/report_json.hpp"

namespace chernoff_heat {

enum ExitCode : int { exit_ok = 0, exit_computation = 1, exit_config = 2, exit_check_failed = 3 };

inline constexpr const char* kConfigEnvVar = "CHERNOFF_HEAT_CONFIG";

struct RunConfig {
  std::string manifold = "circle";
  std::vector<double> radii{};  // empty: unit radii
  double t = 0.5;
  std::string partition = "uniform";  // uniform | random | dominant-last
  std::vector<int> n{2, 4, 8, 16, 32, 64};
  std::vector<double> delta{1e-2, 1e-3, 1e-4};
  int k = 2;
  std::uint64_t seed = 0;
  std::vector<int> level{9};
  double alpha = 0.45;
  double truncation_tolerance = 1e-14;
  int max_terms = 2000;
  double nodes_per_sigma = 4.0;
  std::int64_t max_full_rows = 4096;
  unsigned threads = 0;  // 0: hardware concurrency
  std::string out{};     // file prefix; empty: the subcommand name

  // kernel / chain
  std::string kind = "Q";
  std::int64_t slice = -1;  // row index for a 1-D slice, -1 for the whole matrix
  std::string emit = "error";  // chain: error | matrix

  // checks
  std::string suite = "all";  // lemma1 | lemma2 | lemma3 | lemma4 | expansion | all
  std::vector<double> t_values{0.16, 0.08, 0.04, 0.02};
  std::vector<double> t1_values{0.08, 0.04, 0.02};
  double t2 = 0.25;
  double x = 0.1;
  double power_p = 2.0;
  double power_K = 1.0;
  std::vector<double> expansion_t_values{0.02, 0.01};

  HeatSeriesParams series() const {
    HeatSeriesParams s;
    s.truncation_tolerance = truncation_tolerance;
    s.max_terms = max_terms;
    return s;
  }
  BandwidthGuard guard() const { return BandwidthGuard{nodes_per_sigma}; }
  EmbeddedManifold make_manifold() const { return EmbeddedManifold::from_name(manifold, radii); }
};

inline Json to_json(const RunConfig& c) {
  return {{"manifold", c.manifold},
          {"radii", c.radii},
          {"t", c.t},
          {"partition", c.partition},
          {"n", c.n},
          {"delta", c.delta},
          {"k", c.k},
          {"seed", c.seed},
          {"level", c.level},
          {"alpha", c.alpha},
          {"truncation_tolerance", c.truncation_tolerance},
          {"max_terms", c.max_terms},
          {"nodes_per_sigma", c.nodes_per_sigma},
          {"max_full_rows", c.max_full_rows},
          {"threads", c.threads},
          {"out", c.out},
          {"kind", c.kind},
          {"slice", c.slice},
          {"emit", c.emit},
          {"suite", c.suite},
          {"t_values", c.t_values},
          {"t1_values", c.t1_values},
          {"t2", c.t2},
          {"x", c.x},
          {"power_p", c.power_p},
          {"power_K", c.power_K},
          {"expansion_t_values", c.expansion_t_values}};
}

namespace detail {

template <class T>
void read_key(const Json& j, const char* key, T& dst) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    dst = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(RunConfig& c, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const Json known = to_json(RunConfig{});
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  detail::read_key(j, "manifold", c.manifold);
  detail::read_key(j, "radii", c.radii);
  detail::read_key(j, "t", c.t);
  detail::read_key(j, "partition", c.partition);
  detail::read_key(j, "n", c.n);
  detail::read_key(j, "delta", c.delta);
  detail::read_key(j, "k", c.k);
  detail::read_key(j, "seed", c.seed);
  detail::read_key(j, "level", c.level);
  detail::read_key(j, "alpha", c.alpha);
  detail::read_key(j, "truncation_tolerance", c.truncation_tolerance);
  detail::read_key(j, "max_terms", c.max_terms);
  detail::read_key(j, "nodes_per_sigma", c.nodes_per_sigma);
  detail::read_key(j, "max_full_rows", c.max_full_rows);
  detail::read_key(j, "threads", c.threads);
  detail::read_key(j, "out", c.out);
  detail::read_key(j, "kind", c.kind);
  detail::read_key(j, "slice", c.slice);
  detail::read_key(j, "emit", c.emit);
  detail::read_key(j, "suite", c.suite);
  detail::read_key(j, "t_values", c.t_values);
  detail::read_key(j, "t1_values", c.t1_values);
  detail::read_key(j, "t2", c.t2);
  detail::read_key(j, "x", c.x);
  detail::read_key(j, "power_p", c.power_p);
  detail::read_key(j, "power_K", c.power_K);
  detail::read_key(j, "expansion_t_values", c.expansion_t_values);
}

inline Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

namespace detail {

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

inline void check_times(const std::vector<double>& v, const char* key) {
  check(!v.empty(), std::string(key) + " must not be empty");
  for (double x : v) check(positive_finite(x), std::string(key) + " entries must be positive and finite");
}

}  // namespace detail

/// Range checks done before any computation.
inline void validate(const RunConfig& c) {
  using detail::check;
  using detail::positive_finite;
  try {
    (void)c.make_manifold();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  check(positive_finite(c.t), "t must be positive and finite");
  check(c.partition == "uniform" || c.partition == "random" || c.partition == "dominant-last",
        "partition must be uniform, random or dominant-last");
  check(!c.n.empty(), "n must not be empty");
  for (int v : c.n) check(v >= 1, "n entries must be >= 1");
  check(!c.delta.empty(), "delta must not be empty");
  for (double v : c.delta) check(positive_finite(v) && v < 1.0, "delta entries must lie in (0, 1)");
  check(c.k >= 1, "k must be >= 1");
  check(!c.level.empty(), "level must not be empty");
  for (int v : c.level) check(v >= 1 && v <= 24, "level entries must lie in [1, 24]");
  check(c.alpha > 0.25 && c.alpha < 0.5, "alpha must lie in (1/4, 1/2)");
  check(positive_finite(c.truncation_tolerance), "truncation_tolerance must be positive");
  check(c.max_terms >= 1, "max_terms must be >= 1");
  check(positive_finite(c.nodes_per_sigma), "nodes_per_sigma must be positive");
  check(c.max_full_rows >= 1, "max_full_rows must be >= 1");
  check(c.threads <= 1024, "threads must be <= 1024");
  check(c.kind == "Q" || c.kind == "P" || c.kind == "E" || c.kind == "H", "kind must be Q, P, E or H");
  check(c.slice >= -1, "slice must be -1 or a row index");
  check(c.emit == "error" || c.emit == "matrix", "emit must be error or matrix");
  static const std::set<std::string> suites{"lemma1", "lemma2", "lemma3", "lemma4", "expansion", "all"};
  check(suites.count(c.suite) == 1, "suite must be one of lemma1, lemma2, lemma3, lemma4, expansion, all");
  detail::check_times(c.t_values, "t_values");
  detail::check_times(c.t1_values, "t1_values");
  detail::check_times(c.expansion_t_values, "expansion_t_values");
  check(positive_finite(c.t2), "t2 must be positive");
  check(positive_finite(c.x) && c.x < 1.0, "x must lie in (0, 1)");
  check(std::isfinite(c.power_p) && c.power_p > 1.0, "power_p must be > 1");
  check(positive_finite(c.power_K), "power_K must be positive");
}

/// Defaults, then the file named by CHERNOFF_HEAT_CONFIG, then `config_path`,
/// then `overrides`. Throws ConfigError.
inline RunConfig resolve_config(const std::string& config_path, const Json& overrides) {
  RunConfig c;
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') apply_json(c, read_config_file(env));
  if (!config_path.empty()) apply_json(c, read_config_file(config_path));
  apply_json(c, overrides);
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string out_prefix(const RunConfig& c, const std::string& sub) { return c.out.empty() ? sub : c.out; }

inline std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  return os;
}

inline void write_json(const std::string& path, const Json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

inline Partition single_partition(const RunConfig& c, int d) {
  if (c.partition == "uniform") return uniform_partition(c.t, c.n.front());
  if (c.partition == "random") return random_min_gap_partition(c.t, c.n.front(), c.k, c.seed);
  return dominant_last_step_partition(c.t, c.delta.front(), d);
}

inline PartitionFamily family(const RunConfig& c, int d) {
  if (c.partition == "uniform") return uniform_family(c.t, c.n);
  if (c.partition == "random") return random_family(c.t, c.n, c.k, c.seed);
  return dominant_family(c.t, c.delta, d);
}

inline Json partition_json(const Partition& p) {
  return {{"steps", p.size()}, {"mesh", p.mesh()}, {"min_gap", p.min_gap()}, {"times", p.times()}};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void write_matrix_csv(std::ostream& os, const KernelMatrix& k) {
  os << "x_index,y_index,value\n";
  const auto& rows = k.rows().rows;
  for (Eigen::Index r = 0; r < k.values().rows(); ++r) {
    for (Eigen::Index j = 0; j < k.values().cols(); ++j) {
      os << rows[static_cast<std::size_t>(r)] << ',' << j << ',' << csv_number(k.values()(r, j)) << '\n';
    }
  }
}

}  // namespace detail

inline int run_kernel(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const auto m = c.make_manifold();
  const auto quad = make_quadrature(m, c.level.front());
  RowSelection rows;
  if (c.slice >= 0) {
    if (c.slice >= quad->size()) throw InvalidArgument("slice index beyond the grid size " + std::to_string(quad->size()));
    rows.rows = {static_cast<Eigen::Index>(c.slice)};
    rows.multiplicity = {1.0};
  } else {
    rows = quad->all_rows();
  }
  const auto kind = kernel_kind_from_string(c.kind);
  const auto k = build_kernel_rows(kind, c.t, quad, rows, c.series(), c.guard());
  const std::string prefix = detail::out_prefix(c, "kernel");
  {
    auto os = detail::open_out(prefix + ".csv");
    detail::write_matrix_csv(os, k);
  }
  const double defect = k.max_row_sum_defect();
  Json rep = {{"command", "kernel"},
              {"config", to_json(c)},
              {"grid_size", quad->size()},
              {"rows_written", k.values().rows()},
              {"max_row_sum_defect", defect},
              {"sidecar", {{"timestamp", detail::utc_timestamp()}, {"wall_time", detail::seconds_since(start)}}}};
  detail::write_json(prefix + ".json", rep);
  log << "kernel " << c.kind << " " << m.name() << " t=" << format_number(c.t) << " level=" << quad->level()
      << " rows=" << k.values().rows() << " row_sum_defect=" << format_number(defect) << '\n';
  return exit_ok;
}

inline int run_chain(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const auto m = c.make_manifold();
  const auto quad = make_quadrature(m, c.level.front());
  const auto part = detail::single_partition(c, m.intrinsic_dim());
  const std::string prefix = detail::out_prefix(c, "chain");
  const RowSelection rows = c.emit == "matrix" ? quad->all_rows() : quad->rows_for_sup(c.max_full_rows);
  const auto chain = compose_chain_rows(part, quad, rows, c.guard());
  const auto h = build_kernel_rows(KernelKind::H, c.t, quad, rows, c.series());
  const double sup = sup_error(chain, h);
  const double l2 = weighted_l2_error(chain, h);
  const double defect = chain.max_row_sum_defect();
  {
    auto os = detail::open_out(prefix + ".csv");
    if (c.emit == "matrix") {
      detail::write_matrix_csv(os, chain);
    } else {
      os << "steps,mesh,min_gap,sup_error,weighted_l2_error\n";
      os << part.size() << ',' << detail::csv_number(part.mesh()) << ',' << detail::csv_number(part.min_gap()) << ','
         << detail::csv_number(sup) << ',' << detail::csv_number(l2) << '\n';
    }
  }
  Json rep = {{"command", "chain"},
              {"config", to_json(c)},
              {"partition", detail::partition_json(part)},
              {"grid_size", quad->size()},
              {"rows_evaluated", rows.size()},
              {"sup_error", sup},
              {"weighted_l2_error", l2},
              {"max_row_sum_defect", defect},
              {"sidecar", {{"timestamp", detail::utc_timestamp()}, {"wall_time", detail::seconds_since(start)}}}};
  detail::write_json(prefix + ".json", rep);
  log << "chain " << m.name() << " t=" << format_number(c.t) << " steps=" << part.size()
      << " mesh=" << format_number(part.mesh()) << " sup_error=" << format_number(sup) << '\n';
  return exit_ok;
}

inline int run_study(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const auto m = c.make_manifold();
  const auto fam = detail::family(c, m.intrinsic_dim());
  StudyOptions opts;
  opts.series = c.series();
  opts.guard = c.guard();
  opts.max_full_rows = static_cast<Eigen::Index>(c.max_full_rows);
  const auto reports = convergence_study(m, c.t, fam, c.level, opts);

  const std::string prefix = detail::out_prefix(c, "study");
  {
    auto os = detail::open_out(prefix + ".csv");
    write_study_csv(os, reports);
  }
  Json body = Json::array();
  Json timings = Json::object();
  for (const auto& r : reports) {
    body.push_back(to_json(r));
    timings[std::to_string(r.level)] = timing_json(r);
    for (const auto& row : r.rows) {
      log << "study " << r.manifold << " level=" << r.level << ' ' << row.label << " mesh=" << format_number(row.mesh)
          << " sup_error=" << format_number(row.sup_error) << " l2_error=" << format_number(row.l2_error) << '\n';
    }
    log << "study " << r.manifold << " level=" << r.level << " estimated_order=" << format_number(r.estimated_order)
        << '\n';
  }
  Json rep = {{"command", "study"},
              {"config", to_json(c)},
              {"reports", std::move(body)},
              {"sidecar",
               {{"timestamp", detail::utc_timestamp()},
                {"wall_time", detail::seconds_since(start)},
                {"cell_wall_times", std::move(timings)}}}};
  detail::write_json(prefix + ".json", rep);
  return exit_ok;
}

namespace detail {

inline std::vector<std::string> selected_suites(const std::string& suite) {
  if (suite == "all") return {"lemma1", "lemma2", "lemma3", "lemma4", "expansion"};
  return {suite};
}

inline CheckReport run_suite(const std::string& name, const RunConfig& c) {
  const auto m = c.make_manifold();
  if (name == "lemma4") {
    // The family lives on [0, tau_n] with tau_n^p < K mesh; only the partition kind is taken from the config.
    const std::string kind = c.partition == "random" ? "random" : "uniform";
    const auto fam = power_sum_family(kind, c.n, c.power_p, c.power_K, c.k, c.seed);
    return lemma4_check(fam, c.x, Lemma4Hypothesis{c.power_p, c.power_K, c.k});
  }
  const auto quad = make_quadrature(m, c.level.front());
  if (name == "lemma1") {
    Lemma1Options o;
    o.series = c.series();
    o.guard = c.guard();
    o.max_full_rows = static_cast<Eigen::Index>(c.max_full_rows);
    return lemma1_sweep(quad, c.t_values, c.alpha, o);
  }
  if (name == "lemma2") {
    Lemma2Options o;
    o.series = c.series();
    o.guard = c.guard();
    o.max_full_rows = static_cast<Eigen::Index>(c.max_full_rows);
    return lemma2_check(quad, c.t1_values, c.t2, c.alpha, o);
  }
  if (name == "lemma3") {
    Lemma3Options o;
    o.series = c.series();
    o.guard = c.guard();
    o.max_full_rows = static_cast<Eigen::Index>(c.max_full_rows);
    return lemma3_check(quad, c.t, c.delta, o);
  }
  return expansion_check(quad, quad->node(0), c.expansion_t_values, 2.2, 3.5, c.guard());
}

}  // namespace detail

inline int run_checks(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<CheckReport> reports;
  Json body = Json::array();
  Json errors = Json::object();
  Json timings = Json::object();
  bool all_pass = true;
  bool any_error = false;
  for (const auto& name : detail::selected_suites(c.suite)) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto rep = detail::run_suite(name, c);
      all_pass = all_pass && rep.pass;
      body.push_back(to_json(rep));
      log << "checks " << name << ' ' << rep.manifold << (rep.pass ? " PASS" : " FAIL");
      for (const auto& s : rep.series) {
        if (s.rule.kind != RuleKind::record_only && !s.pass) log << ' ' << s.name << "=fail";
      }
      log << '\n';
      reports.push_back(std::move(rep));
    } catch (const std::exception& e) {
      any_error = true;
      errors[name] = e.what();
      log << "checks " << name << " ERROR " << e.what() << '\n';
    }
    timings[name] = detail::seconds_since(t0);
  }
  const std::string prefix = detail::out_prefix(c, "checks");
  {
    auto os = detail::open_out(prefix + ".csv");
    write_checks_csv(os, reports);
  }
  Json rep = {{"command", "checks"},
              {"config", to_json(c)},
              {"checks", std::move(body)},
              {"errors", std::move(errors)},
              {"pass", all_pass && !any_error},
              {"sidecar",
               {{"timestamp", detail::utc_timestamp()},
                {"wall_time", detail::seconds_since(start)},
                {"suite_wall_times", std::move(timings)}}}};
  detail::write_json(prefix + ".json", rep);
  if (any_error) return exit_computation;
  return all_pass ? exit_ok : exit_check_failed;
}

inline int run_dump_grid(const RunConfig& c, std::ostream& log) {
  const auto m = c.make_manifold();
  const auto quad = make_quadrature(m, c.level.front());
  const std::string prefix = detail::out_prefix(c, "grid");
  const int pd = m.intrinsic_dim();
  const int ad = m.ambient_dim();
  {
    auto os = detail::open_out(prefix + ".csv");
    os << "index";
    for (int i = 0; i < pd; ++i) os << ",param" << i;
    for (int i = 0; i < ad; ++i) os << ",ambient" << i;
    os << ",weight\n";
    for (Eigen::Index j = 0; j < quad->size(); ++j) {
      const auto& node = quad->node(j);
      os << j;
      for (double v : node.params()) os << ',' << detail::csv_number(v);
      for (double v : node.ambient()) os << ',' << detail::csv_number(v);
      os << ',' << detail::csv_number(quad->weights()[static_cast<std::size_t>(j)]) << '\n';
    }
  }
  const double total = quad->weight_vector().sum();
  Json rep = {{"command", "dump-grid"},
              {"config", to_json(c)},
              {"grid_size", quad->size()},
              {"shape", quad->shape()},
              {"resolution", quad->resolution()},
              {"total_weight", total},
              {"total_volume", m.total_volume()},
              {"sidecar", {{"timestamp", detail::utc_timestamp()}}}};
  detail::write_json(prefix + ".json", rep);
  log << "dump-grid " << m.name() << " level=" << quad->level() << " nodes=" << quad->size()
      << " total_weight=" << format_number(total) << '\n';
  return exit_ok;
}

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"kernel", "chain", "study", "checks", "dump-grid"};
  return names;
}

/// Runs one subcommand on a validated config. Computation errors are reported
/// on `err` and mapped to exit code 1.
inline int run(const std::string& subcommand, const RunConfig& c, std::ostream& log = std::cout,
               std::ostream& err = std::cerr) {
  try {
    validate(c);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }
  if (c.threads > 0) set_max_threads(c.threads);
  try {
    if (subcommand == "kernel") return run_kernel(c, log);
    if (subcommand == "chain") return run_chain(c, log);
    if (subcommand == "study") return run_study(c, log);
    if (subcommand == "checks") return run_checks(c, log);
    if (subcommand == "dump-grid") return run_dump_grid(c, log);
    err << "config error: unknown subcommand '" << subcommand << "'\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_computation;
  }
}

}  // namespace chernoff_heat
