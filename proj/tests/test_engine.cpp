#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "intersim/engine/config.hpp"
#include "intersim/engine/engine.hpp"
#include "intersim/engine/metrics.hpp"
#include "intersim/engine/results.hpp"
#include "intersim/roadnet/presets.hpp"
#include "test_support.hpp"

using namespace intersim;
using namespace intersim::engine;
namespace fs = std::filesystem;

namespace {

roadnet::ScenarioDocument single() { return roadnet::single_intersection_document(3, 200.0); }

RunResults run_with(const roadnet::ScenarioDocument& doc, std::vector<std::string> overrides) {
  return run(doc, make_config(doc.config, overrides));
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config defaults, overrides and unknown keys") {
  const auto c = make_config(nlohmann::json::object(), std::vector<std::string>{"mode=ca", "wdp.wp=0.3", "seed=7"});
  CHECK(c.mode == Mode::Ca);
  CHECK(c.auction.wdp.wp == doctest::Approx(0.3));
  CHECK(c.seed == 7);
  CHECK(c.window_s == doctest::Approx(1800.0));
  CHECK_THROWS_AS(make_config(nlohmann::json::object(), std::vector<std::string>{"wdp.nope=1"}), ConfigError);
  CHECK_THROWS_AS(make_config(nlohmann::json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(make_config(nlohmann::json::object(), std::vector<std::string>{"mode=auction"}), ConfigError);
  CHECK_THROWS_AS(make_config(nlohmann::json::object(), std::vector<std::string>{"window_s=0"}), ConfigError);
  CHECK_THROWS_AS(make_config(nlohmann::json::object(), std::vector<std::string>{"novalue"}), ConfigError);
}

TEST_CASE("delay and normalized delay") {
  CHECK(delay(65.0, 60.0) == doctest::Approx(5.0));
  CHECK(delay(60.0, 60.0) == 0.0);
  CHECK(delay(59.5, 60.0) == 0.0);
  CHECK(normalized_delay(12 * 60.0, 10 * 60.0) == doctest::Approx(0.2));
  CHECK(normalized_delay(600.0, 600.0) == 0.0);
  CHECK(normalized_delay(1200.0, 600.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(normalized_delay(10.0, 0.0), std::invalid_argument);
}

TEST_CASE("moving average equals the arithmetic mean in any order") {
  CHECK(moving_average_update(0.0, 10.0, 0) == 10.0);
  CHECK(moving_average_update(10.0, 20.0, 1) == doctest::Approx(15.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(30.0, 900.0);
  std::vector<double> trips(500);
  for (auto& t : trips) t = u(rng);
  const double mean = std::accumulate(trips.begin(), trips.end(), 0.0) / trips.size();
  for (int perm = 0; perm < 5; ++perm) {
    std::shuffle(trips.begin(), trips.end(), rng);
    double avg = 0.0;
    for (std::size_t i = 0; i < trips.size(); ++i) avg = moving_average_update(avg, trips[i], i);
    CHECK(std::abs(avg - mean) < 1e-9);
  }
}

TEST_CASE("density integral above the optimum") {
  const double mu_opt = 40.0;
  SUBCASE("never above") {
    std::vector<double> t = {0, 10, 20}, mu = {40, 40, 40};
    CHECK(density_integral_above_opt(t, mu, mu_opt) == 0.0);
    CHECK(above_window(t, mu, mu_opt).empty);
  }
  SUBCASE("rectangular pulse of one hour at twice the optimum") {
    std::vector<double> t, mu;
    for (int s = 0; s <= 3600; s += 10) {
      t.push_back(s);
      mu.push_back(2 * mu_opt);
    }
    CHECK(density_integral_above_opt(t, mu, mu_opt) == doctest::Approx(80.0));
  }
  SUBCASE("triangular pulse within 1% of the closed form") {
    // Peak 100 at 1800 s over a 3600 s base; samples above 40 span the window.
    std::vector<double> t, mu;
    for (int s = 0; s <= 3600; s += 10) {
      t.push_back(s);
      mu.push_back(100.0 * (1.0 - std::abs(s - 1800.0) / 1800.0));
    }
    const auto w = above_window(t, mu, mu_opt);
    const double width_h = (w.t2 - w.t1) / 3600.0;
    // Area of max(mu, mu_opt) over [t1, t2]: the excess triangle plus the base rectangle.
    const double excess = 0.5 * (100.0 - mu_opt) * (0.6 * 3600.0 / 3600.0);
    const double closed = excess + mu_opt * width_h;
    CHECK(density_integral(t, mu, mu_opt, w) == doctest::Approx(closed).epsilon(0.01));
  }
  SUBCASE("common window covers both curves") {
    const Window a{10, 50, false}, b{30, 90, false}, e{};
    const auto c = common_window(a, b);
    CHECK(c.t1 == 10);
    CHECK(c.t2 == 90);
    CHECK(common_window(a, e).t2 == 50);
  }
}

TEST_CASE("poisson spawning matches the aggregate rate") {
  auto total = [](double rate, std::uint64_t seed) {
    auto arrivals = make_stream(seed, "spawn");
    auto choice = make_stream(seed, "od");
    std::size_t n = 0;
    for (int tick = 0; tick < 1800; ++tick) n += spawn_poisson(rate, 12, arrivals, choice, 1.0).size();
    return n;
  };
  double sum1 = 0.0, sum30 = 0.0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const auto n1 = total(1.0, s);
    CHECK(n1 >= 15);
    CHECK(n1 <= 45);
    sum1 += n1;
    sum30 += total(30.0, s);
  }
  CHECK(sum1 / 100 == doctest::Approx(30.0).epsilon(0.1));
  CHECK(sum30 / 100 == doctest::Approx(900.0).epsilon(0.03));
  CHECK(total(15.0, 9) == total(15.0, 9));
  auto arrivals = make_stream(1, "spawn");
  auto choice = make_stream(1, "od");
  for (int tick = 0; tick < 200; ++tick) {
    for (auto i : spawn_poisson(30.0, 12, arrivals, choice, 1.0)) CHECK(i < 12);
  }
}

TEST_CASE("empty demand produces no vehicles") {
  auto doc = single();
  const auto r = run_with(doc, {"window_s=60"});
  CHECK(r.spawned == 0);
  CHECK(r.vehicles.empty());
  CHECK(r.moving_average.empty());
  CHECK_FALSE(r.partial);
}

TEST_CASE("a lone vehicle crosses without delay") {
  auto doc = single();
  for (std::string mode : {"fcfs", "ca", "cta", "ca-cta"}) {
    CAPTURE(mode);
    const auto r = run_with(doc, {"mode=" + mode, "window_s=10",
                                  R"(vehicles=[{"t":0,"origin":"N","destination":"S"}])"});
    REQUIRE(r.vehicles.size() == 1);
    const auto& v = r.vehicles.front();
    CHECK(v.completed);
    CHECK(v.delay_s <= 1.0);
    CHECK(v.travel_s == doctest::Approx(v.unhindered_s).epsilon(0.02));
  }
}

TEST_CASE("vehicles on crossing paths all complete") {
  // Two simultaneous arrivals on perpendicular approaches whose paths cross in the box;
  // then opposing left turns added on top.
  auto doc = single();
  const std::string two = R"({"t":0,"origin":"N","destination":"S"},{"t":0,"origin":"W","destination":"E"})";
  const std::string four = two + R"(,{"t":0,"origin":"N","destination":"E"},{"t":0,"origin":"S","destination":"W"})";
  for (const auto& [set, n] : {std::pair{two, 2u}, std::pair{four, 4u}}) {
    for (std::string mode : {"fcfs", "ca"}) {
      CAPTURE(mode);
      CAPTURE(n);
      const auto r = run_with(doc, {"mode=" + mode, "window_s=10", "vehicles=[" + set + "]"});
      CHECK(r.spawned == n);
      CHECK(r.completed == n);
      CHECK_FALSE(r.partial);
      CHECK(r.violations == 0);
    }
  }
}

TEST_CASE("runs are byte-identical per seed and conserve vehicles and money") {
  auto doc = single();
  const auto tmp = fs::temp_directory_path() / "intersim_test_engine";
  fs::remove_all(tmp);
  for (std::string mode : {"fcfs", "ca", "cta", "ca-cta"}) {
    CAPTURE(mode);
    const std::vector<std::string> o = {"mode=" + mode, "lambda_per_min=20", "window_s=300", "seed=5"};
    const auto a = run_with(doc, o);
    const auto b = run_with(doc, o);
    write_results(a, tmp / "a");
    write_results(b, tmp / "b");
    for (const char* f : {"vehicles.csv", "links.csv", "intersections.csv", "prices.csv", "auctions.csv",
                          "moving_average.csv", "manifest.json"}) {
      CAPTURE(f);
      CHECK(slurp(tmp / "a" / f) == slurp(tmp / "b" / f));
    }
    CHECK(a.spawned == a.vehicles.size());
    std::size_t done = 0;
    Money spent = 0.0;
    for (const auto& v : a.vehicles) {
      done += v.completed;
      spent += v.spent;
    }
    CHECK(done == a.completed);
    CHECK(a.completed == a.spawned);
    CHECK(std::abs(a.spending - a.revenue) < 1e-6);
    CHECK(std::abs(spent - a.spending) < 1e-6);
    double avg = 0.0;
    for (std::size_t i = 0; i < a.moving_average.size(); ++i) {
      avg += (a.moving_average[i].travel_s - avg) / static_cast<double>(i + 1);
      CHECK(std::abs(a.moving_average[i].average_s - avg) < 1e-9);
    }
    fs::remove_all(tmp);
  }
}

TEST_CASE("auction mode writes auction rows; fcfs does not") {
  auto doc = single();
  const auto ca = run_with(doc, {"mode=ca", "lambda_per_min=10", "window_s=120"});
  CHECK_FALSE(ca.auctions.empty());
  const auto fcfs = run_with(doc, {"mode=fcfs", "lambda_per_min=10", "window_s=120"});
  CHECK(fcfs.auctions.empty());
  const auto cta = run_with(doc, {"mode=cta", "lambda_per_min=10", "window_s=120"});
  CHECK_FALSE(cta.prices.empty());
  CHECK(fcfs.prices.empty());
}

TEST_CASE("grid runs in the meso model and priced modes charge for crossings") {
  auto doc = roadnet::grid_document();
  const auto r = run_with(doc, {"mode=cta", "window_s=300"});
  CHECK(r.spawned > 0);
  CHECK(r.completed == r.spawned);
  CHECK(std::abs(r.spending - r.revenue) < 1e-6);
}

TEST_CASE("built-in presets match the shipped scenario files") {
  for (const auto& [file, doc] : {std::pair{"single_intersection.json", single()},
                                  std::pair{"grid4x4.json", roadnet::grid_document()}}) {
    CAPTURE(file);
    auto shipped = roadnet::read_scenario_file(testing::scenario_path(file));
    auto built = doc;
    shipped.config = nlohmann::json::object();
    built.config = nlohmann::json::object();
    CHECK(roadnet::to_json(shipped) == roadnet::to_json(built));
  }
}

TEST_CASE("every shipped scenario loads and validates") {
  for (const auto& entry : fs::directory_iterator(INTERSIM_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const auto doc = roadnet::read_scenario_file(entry.path().string());
    const auto cfg = make_config(doc.config);
    CHECK_NOTHROW(Network(doc, cfg.tick_s));
  }
}
