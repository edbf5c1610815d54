#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "intersim/cli/experiments.hpp"
#include "intersim/engine/engine.hpp"
#include "intersim/engine/results.hpp"
#include "intersim/roadnet/network.hpp"

namespace fs = std::filesystem;
using namespace intersim;

namespace {

int run_verb(const std::string& scenario, std::optional<std::uint64_t> seed, const fs::path& out,
             std::vector<std::string> overrides) {
  // Parse and validate everything before touching the output directory.
  auto doc = roadnet::read_scenario_file(scenario);
  if (seed) overrides.push_back("seed=" + std::to_string(*seed));
  auto cfg = engine::make_config(doc.config, overrides);
  engine::Network net(doc, cfg.tick_s);
  auto results = engine::run(net, cfg);
  engine::write_results(results, out);
  std::cout << cli::format_run_summary(cli::summarize_run_dir(out));
  if (results.partial) {
    std::cerr << "partial results: horizon reached with vehicles in the network\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reservation-based intersection simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  std::string preset;
  int seeds = 30;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Run one scenario and write its result tables");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--out", out, "Output directory");
  run->add_option("--set", overrides, "Config override key=value (repeatable)");

  auto* exp = app.add_subcommand("experiment", "Run a preset over seeds and write summary tables");
  exp->add_option("--preset", preset, "Preset name")->required();
  exp->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  exp->add_option("--seed", seed, "First seed");
  exp->add_option("--jobs", jobs, "Parallel processes")->check(CLI::PositiveNumber);
  exp->add_option("--out", out, "Output directory");
  exp->add_option("--set", overrides, "Config override key=value applied to every run (repeatable)");
  exp->add_option("--scenario", scenario, "Replace the preset's scenario");

  auto* bench = app.add_subcommand("wdp-bench", "Stochastic vs exact winner determination on generated instances");
  int instances = 200;
  std::size_t min_bids = 3, max_bids = 80;
  bool calibrate = false;
  bench->add_option("--instances", instances, "Instance count")->check(CLI::PositiveNumber);
  bench->add_option("--min-bids", min_bids);
  bench->add_option("--max-bids", max_bids);
  bench->add_option("--seed", seed, "Generator seed");
  bench->add_option("--set", overrides, "wdp.* overrides, e.g. wdp.passes=5000");
  bench->add_flag("--calibrate", calibrate, "Report passes completed in the configured wall-clock budget");

  auto* summ = app.add_subcommand("summarize", "Recompute summary tables from stored run outputs");
  summ->add_option("--out", out, "Experiment or run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const fs::path dir = out.empty() ? engine::default_output_root() / fs::path(scenario).stem() : fs::path(out);
      return run_verb(scenario, seed, dir, overrides);
    }
    if (exp->parsed()) {
      cli::ExperimentOptions o;
      o.preset = preset;
      o.seeds = seeds;
      o.first_seed = seed.value_or(1);
      o.jobs = jobs;
      o.out = out.empty() ? engine::default_output_root() / preset : fs::path(out);
      o.overrides = overrides;
      o.scenario = scenario;
      o.self = fs::read_symlink("/proc/self/exe").string();
      return cli::run_experiment(o, std::cout);
    }
    if (bench->parsed()) {
      cli::BenchOptions o;
      o.instances = instances;
      o.min_bids = min_bids;
      o.max_bids = max_bids;
      o.seed = seed.value_or(1);
      o.overrides = overrides;
      o.calibrate = calibrate;
      return cli::run_wdp_bench(o, std::cout);
    }
    if (summ->parsed()) return cli::summarize_dir(out, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
