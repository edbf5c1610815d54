#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "intersim/cli/table.hpp"
#include "intersim/roadnet/network.hpp"

namespace intersim::cli {

/// Headline numbers of one run, recomputed from its stored tables.
struct RunSummary {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t spawned = 0;
  std::size_t completed = 0;
  bool partial = false;
  double mean_travel_s = 0.0;
  double mean_delay_s = 0.0;
  double mean_normalized_delay = 0.0;
  double final_moving_average_s = 0.0;
  long requests = 0;
  long rejections = 0;
  long violations = 0;
  double revenue = 0.0;
  double spending = 0.0;
};

RunSummary summarize_run_dir(const std::filesystem::path& dir);
std::string format_run_summary(const RunSummary& s);

const std::vector<std::string>& preset_names();

/// One configuration of an experiment; every seed is run once per cell.
struct Cell {
  std::string name;
  std::vector<std::string> overrides;
};

struct Plan {
  std::string preset;
  roadnet::ScenarioDocument scenario;
  std::vector<std::string> common;  // preset parameters, applied before the cell's own
  std::vector<std::string> user;    // --set overrides, applied last
  std::vector<Cell> cells;
  std::vector<std::uint64_t> seeds;

  /// Config overrides of one run, in application order.
  std::vector<std::string> overrides(const Cell& cell, std::uint64_t seed) const;
  nlohmann::json to_json() const;
};

struct ExperimentOptions {
  std::string preset;
  int seeds = 30;
  std::uint64_t first_seed = 1;
  int jobs = 1;
  std::filesystem::path out;
  std::vector<std::string> overrides;
  std::string scenario;  // replaces the preset's network when set
  std::string self;      // path of this executable, for --jobs > 1
};

/// Throws ConfigError for an unknown preset.
Plan make_plan(const ExperimentOptions& o);

/// Directory of one run inside an experiment directory.
std::filesystem::path run_dir(const std::filesystem::path& out, const std::string& cell, std::uint64_t seed);

/// Writes experiment.json and scenario.json, then runs every (cell, seed). With jobs > 1 the runs
/// are child processes of `self`; the stored outputs are identical either way.
void execute_plan(const Plan& plan, const std::filesystem::path& out, int jobs, const std::string& self,
                  std::ostream& log);

struct Summary {
  std::vector<SummaryTable> tables;
  std::vector<std::string> notes;

  /// Throws std::out_of_range for an unknown table.
  const SummaryTable& table(std::string_view name) const;
};

/// Pure fold over the stored run outputs of an experiment directory.
Summary summarize_experiment(const std::filesystem::path& out);

/// Writes summary/<table>.csv and prints the tables and notes.
void write_summary(const Summary& s, const std::filesystem::path& out, std::ostream& os);

int run_experiment(const ExperimentOptions& o, std::ostream& os);

/// Experiment directories are re-summarised; run directories print their run summary.
int summarize_dir(const std::filesystem::path& dir, std::ostream& os);

struct BenchOptions {
  int instances = 200;
  std::size_t min_bids = 3;
  std::size_t max_bids = 80;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;  // wdp.* keys
  bool calibrate = false;
};

struct BenchInstance {
  std::size_t bids = 0;
  double exact = 0.0;
  double stochastic = 0.0;
  double ratio = 1.0;
  std::uint64_t passes = 0;
};

struct BenchResult {
  std::vector<BenchInstance> instances;
  std::size_t within_95 = 0;
  std::uint64_t budget_passes = 0;
};

/// Stochastic search at the configured pass budget against the exact optimum on generated rounds
/// of the default three-lane intersection.
BenchResult wdp_bench(const BenchOptions& o);
int run_wdp_bench(const BenchOptions& o, std::ostream& os);

}  // namespace intersim::cli
