#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "intersim/cli/experiments.hpp"
#include "intersim/cli/stats.hpp"
#include "intersim/cli/table.hpp"

using namespace intersim;
using namespace intersim::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("intersim_test_cli_" + name);
  fs::remove_all(d);
  return d;
}

int tool(const std::string& args) {
  const std::string cmd = std::string(INTERSIM_TOOL) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("t interval matches a reference implementation") {
  struct Case {
    std::vector<double> xs;
    double confidence, mean, half;
  };
  // Frozen from scipy.stats: mean, sem * t.ppf((1 + c) / 2, n - 1).
  const Case cases[] = {
      {{1, 2, 3, 4, 5}, 0.95, 3.0, 1.963243161478},
      {{0.3, 0.9}, 0.95, 0.6, 3.811861420930},
      {{10.5, 12.25, 9.75, 11.0, 13.5, 8.25, 10.0}, 0.95, 10.75, 1.590716763639},
      {{2, 4, 7, 1}, 0.99, 3.5, 7.726796732018},
  };
  for (const auto& c : cases) {
    const auto iv = t_interval(c.xs, c.confidence);
    CHECK(iv.n == c.xs.size());
    CHECK(std::abs(iv.mean - c.mean) < 1e-6);
    CHECK(std::abs(iv.half_width - c.half) < 1e-6);
    CHECK(iv.lower() == doctest::Approx(c.mean - c.half));
  }
  CHECK(std::isnan(t_interval(std::vector<double>{4.0}).half_width));
  CHECK(t_interval(std::vector<double>{4.0}).mean == 4.0);
  CHECK(std::isnan(t_interval(std::vector<double>{}).mean));
  CHECK(t_interval(std::vector<double>{2, 2, 2}).half_width == 0.0);
}

TEST_CASE("csv tables round-trip") {
  const auto dir = fresh_dir("table");
  SummaryTable t{"demo", {"a", "b"}, {}};
  t.add({"x", fmt(1.5)});
  t.add({"y", fmt(-2)});
  t.write_csv(dir);
  const auto back = CsvTable::read(dir / "demo.csv");
  CHECK(back.size() == 2);
  CHECK(back.at(1, back.column("a")) == "y");
  CHECK(back.num(0, back.column("b")) == 1.5);
  CHECK(t.num(1, "b") == -2.0);
  CHECK_THROWS_AS(back.column("c"), std::out_of_range);
  std::ofstream(dir / "bad.csv") << "a,b\n1\n";
  CHECK_THROWS(CsvTable::read(dir / "bad.csv"));
  CHECK_THROWS(CsvTable::read(dir / "missing.csv"));
  fs::remove_all(dir);
}

TEST_CASE("plans apply overrides in order and reject unknown presets") {
  ExperimentOptions o;
  o.preset = "ca-vs-fcfs";
  o.seeds = 2;
  o.first_seed = 4;
  o.overrides = {"window_s=120"};
  const auto p = make_plan(o);
  CHECK(p.cells.size() == 14);
  CHECK(p.seeds == std::vector<std::uint64_t>{4, 5});
  const auto ov = p.overrides(p.cells.front(), 4);
  CHECK(ov.back() == "seed=4");
  CHECK(ov[ov.size() - 2] == "window_s=120");
  for (const auto& name : preset_names()) {
    o.preset = name;
    CHECK_NOTHROW(make_plan(o));
  }
  o.preset = "nope";
  CHECK_THROWS_AS(make_plan(o), ConfigError);
  o.preset = "bid-delay";
  o.overrides = {"wdp.bogus=1"};
  CHECK_THROWS_AS(make_plan(o), ConfigError);
}

TEST_CASE("summarize is a pure fold over stored runs") {
  const auto dir = fresh_dir("experiment");
  ExperimentOptions o;
  o.preset = "bid-delay";
  o.seeds = 3;
  o.out = dir;
  o.overrides = {"window_s=240"};
  std::ostringstream log;
  CHECK(run_experiment(o, log) == 0);
  const auto first = slurp(dir / "summary" / "endowment_delay.csv");
  const auto runs = slurp(dir / "summary" / "runs.csv");
  CHECK(first.find("1000.000000") != std::string::npos);
  std::ostringstream again;
  CHECK(summarize_dir(dir, again) == 0);
  CHECK(slurp(dir / "summary" / "endowment_delay.csv") == first);
  CHECK(slurp(dir / "summary" / "runs.csv") == runs);
  const auto s = summarize_experiment(dir);
  CHECK(s.table("runs").rows.size() == 3);
  CHECK_THROWS_AS(s.table("absent"), std::out_of_range);
  fs::remove_all(dir);
}

TEST_CASE("wdp bench finds near-optimal winner sets") {
  BenchOptions o;
  o.instances = 20;
  o.max_bids = 30;
  const auto r = wdp_bench(o);
  CHECK(r.instances.size() == 20);
  for (const auto& b : r.instances) {
    CHECK(b.bids >= 3);
    CHECK(b.bids <= 30);
    CHECK(b.stochastic <= b.exact + 1e-9);
  }
  CHECK(r.within_95 >= 18);
  o.overrides = {"mode=ca"};
  CHECK_THROWS_AS(wdp_bench(o), ConfigError);
}

TEST_CASE("command line run") {
  const auto dir = fresh_dir("run");
  const std::string scenario = std::string(INTERSIM_SCENARIO_DIR) + "/single_intersection.json";
  SUBCASE("mode override produces an auction log") {
    CHECK(tool("run --scenario " + scenario + " --out " + dir.string() + " --set mode=ca --set window_s=120") == 0);
    CHECK(fs::exists(dir / "vehicles.csv"));
    CHECK(slurp(dir / "vehicles.csv").find("delay_s") != std::string::npos);
    CHECK(CsvTable::read(dir / "auctions.csv").size() > 0);
  }
  SUBCASE("corrupt scenario exits non-zero and writes nothing") {
    const auto bad = fs::temp_directory_path() / "intersim_test_cli_bad.json";
    std::ofstream(bad) << R"({"name": "x", "nodes": [ {"id": "A"} ,, ]})";
    CHECK(tool("run --scenario " + bad.string() + " --out " + dir.string()) != 0);
    CHECK_FALSE(fs::exists(dir));
    std::ofstream(bad) << R"({"name":"x","nodes":[{"id":"A","x":0,"y":0}],"links":[{"id":"l","from":"A","to":"B",)"
                          R"("length_m":10,"vmax_mps":10,"lanes":1}],"od":[]})";
    CHECK(tool("run --scenario " + bad.string() + " --out " + dir.string()) != 0);
    CHECK_FALSE(fs::exists(dir));
    fs::remove(bad);
  }
  SUBCASE("unknown override is rejected before any output") {
    CHECK(tool("run --scenario " + scenario + " --out " + dir.string() + " --set wdp.nope=1") != 0);
    CHECK_FALSE(fs::exists(dir));
  }
  SUBCASE("unknown preset") {
    CHECK(tool("experiment --preset nope --out " + dir.string()) != 0);
    CHECK_FALSE(fs::exists(dir));
  }
  fs::remove_all(dir);
}
