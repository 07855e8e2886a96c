// chernoff_heat: kernel dumps, chains, convergence studies and checks.
//
//   chernoff_heat study --manifold circle --t 0.5 --n 2,4,8,16 --level 9 --out results/circle
//   chernoff_heat checks --suite lemma4
//
// Flags override the config file given with --config, which overrides the
// file named by CHERNOFF_HEAT_CONFIG.

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <type_traits>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chernoff_heat/cli.hpp"

namespace ch = chernoff_heat;

namespace {

template <class T>
void add(CLI::App& app, ch::Json& overrides, std::vector<std::function<void()>>& collect, const std::string& flag,
         const std::string& key, const std::string& help) {
  auto value = std::make_shared<T>();
  auto* opt = app.add_option(flag, *value, help);
  if constexpr (!std::is_same_v<T, std::string> && requires { value->begin(); }) opt->delimiter(',');
  collect.push_back([opt, value, key, &overrides] {
    if (opt->count() > 0) overrides[key] = *value;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chernoff-type approximation of heat kernels on the circle, sphere and flat torus"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");

  ch::Json overrides = ch::Json::object();
  std::vector<std::function<void()>> collect;
  add<std::string>(app, overrides, collect, "--manifold", "manifold", "circle | sphere | torus");
  add<std::vector<double>>(app, overrides, collect, "--radius,--radii", "radii", "radius, or r1,r2 for the torus");
  add<double>(app, overrides, collect, "--t", "t", "final time");
  add<std::string>(app, overrides, collect, "--partition", "partition", "uniform | random | dominant-last");
  add<std::vector<int>>(app, overrides, collect, "--n", "n", "step counts");
  add<std::vector<double>>(app, overrides, collect, "--delta", "delta", "head mesh values for dominant-last");
  add<int>(app, overrides, collect, "--k", "k", "min-gap exponent");
  add<std::uint64_t>(app, overrides, collect, "--seed", "seed", "seed for random partitions");
  add<std::vector<int>>(app, overrides, collect, "--level", "level", "quadrature levels");
  add<double>(app, overrides, collect, "--alpha", "alpha", "near-diagonal exponent in (1/4, 1/2)");
  add<std::string>(app, overrides, collect, "--out", "out", "output prefix (writes <out>.csv and <out>.json)");
  add<unsigned>(app, overrides, collect, "--threads", "threads", "worker thread cap (0 = all cores)");
  add<double>(app, overrides, collect, "--truncation-tolerance", "truncation_tolerance", "series truncation tolerance");
  add<int>(app, overrides, collect, "--max-terms", "max_terms", "series term cap");
  add<double>(app, overrides, collect, "--nodes-per-sigma", "nodes_per_sigma", "bandwidth guard");
  add<std::int64_t>(app, overrides, collect, "--max-full-rows", "max_full_rows",
                    "grids above this size use symmetry-representative rows");
  add<std::string>(app, overrides, collect, "--kind", "kind", "kernel: Q | P | E | H");
  add<std::int64_t>(app, overrides, collect, "--slice", "slice", "kernel: row index of a 1-D slice");
  add<std::string>(app, overrides, collect, "--emit", "emit", "chain: error | matrix");
  add<std::string>(app, overrides, collect, "--suite", "suite", "checks: lemma1 | lemma2 | lemma3 | lemma4 | expansion | all");
  add<std::vector<double>>(app, overrides, collect, "--t-values", "t_values", "checks: near-diagonal t sweep");
  add<std::vector<double>>(app, overrides, collect, "--t1-values", "t1_values", "checks: composition t1 sweep");
  add<double>(app, overrides, collect, "--t2", "t2", "checks: composition t2");
  add<double>(app, overrides, collect, "--x", "x", "checks: power-sum exponent");
  add<double>(app, overrides, collect, "--power-p", "power_p", "checks: power-sum family exponent p > 1");
  add<double>(app, overrides, collect, "--power-K", "power_K", "checks: power-sum family constant K");
  add<std::vector<double>>(app, overrides, collect, "--expansion-t-values", "expansion_t_values",
                           "checks: normalizer expansion t values");

  static const std::map<std::string, std::string> about{
      {"kernel", "write a kernel matrix or a single row"},
      {"chain", "compose one partition and compare it with the heat kernel"},
      {"study", "error of the composed chain against the heat kernel over partitions and levels"},
      {"checks", "run the kernel-relation check suites"},
      {"dump-grid", "write quadrature nodes and weights"}};
  std::string chosen;
  for (const auto& name : ch::subcommands()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->fallthrough();
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ch::exit_config;
  }
  for (auto& f : collect) f();

  ch::RunConfig cfg;
  try {
    cfg = ch::resolve_config(config_path, overrides);
  } catch (const ch::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ch::exit_config;
  }
  return ch::run(chosen, cfg);
}
