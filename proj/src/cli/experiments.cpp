#include "intersim/cli/experiments.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "intersim/cli/stats.hpp"
#include "intersim/engine/config.hpp"
#include "intersim/engine/engine.hpp"
#include "intersim/engine/metrics.hpp"
#include "intersim/engine/results.hpp"
#include "intersim/roadnet/presets.hpp"

extern char** environ;

namespace intersim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kLambdaGrid[] = {1, 5, 10, 15, 20, 25, 30};
constexpr double kSeriesStepS = 60.0;

std::string num_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  return json::parse(is);
}

bool is_true(const std::string& s) { return s == "1" || s == "true"; }

// ---------------------------------------------------------------- presets

roadnet::ScenarioDocument single_doc() {
  auto doc = roadnet::single_intersection_document(3, 200.0);
  doc.config = {{"mode", "fcfs"}, {"lambda_per_min", 15}, {"window_s", 1800.0}};
  return doc;
}

roadnet::ScenarioDocument grid_doc() {
  auto doc = roadnet::grid_document();
  doc.config = {{"mode", "fcfs"}, {"window_s", 3000.0}};
  return doc;
}

Plan preset_plan(const std::string& name) {
  Plan p;
  p.preset = name;
  if (name == "bid-delay") {
    p.scenario = single_doc();
    p.common = {"mode=ca", "lambda_per_min=15", "tracked.endowments=[10,100,1000]", "tracked.share=0.1"};
    p.cells.push_back({"ca", {}});
  } else if (name == "ca-vs-fcfs") {
    p.scenario = single_doc();
    for (const char* mode : {"fcfs", "ca"}) {
      for (double l : kLambdaGrid) {
        p.cells.push_back({std::string(mode) + "-l" + num_label(l),
                           {std::string("mode=") + mode, "lambda_per_min=" + num_label(l)}});
      }
    }
  } else if (name == "reservation-distance") {
    p.scenario = single_doc();
    p.common = {"mode=ca"};
    for (double l : kLambdaGrid) p.cells.push_back({"ca-l" + num_label(l), {"lambda_per_min=" + num_label(l)}});
  } else if (name == "cta-grid") {
    p.scenario = grid_doc();
    for (const char* mode : {"fcfs", "cta"}) p.cells.push_back({mode, {std::string("mode=") + mode}});
  } else if (name == "ca-cta-grid") {
    p.scenario = grid_doc();
    for (const char* mode : {"fcfs", "cta", "ca-cta"}) p.cells.push_back({mode, {std::string("mode=") + mode}});
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (" + known + ")");
  }
  return p;
}

// ---------------------------------------------------------------- stored runs

struct RunData {
  std::string cell;
  std::uint64_t seed = 0;
  fs::path dir;
  json manifest;

  const json& config() const { return manifest.at("config"); }
  double window() const { return config().at("window_s").get<double>(); }
  double mu_opt() const { return config().at("market").at("jam_density").get<double>() / 2.0; }
  std::string mode() const { return manifest.at("mode").get<std::string>(); }
  double lambda() const {
    const auto& l = config().at("lambda_per_min");
    return l.is_null() ? std::nan("") : l.get<double>();
  }
  CsvTable table(const char* name) const { return CsvTable::read(dir / name); }
};

struct Experiment {
  json plan;
  std::vector<std::string> cells;
  std::vector<RunData> runs;

  std::vector<const RunData*> of(const std::string& cell) const {
    std::vector<const RunData*> out;
    for (const auto& r : runs) {
      if (r.cell == cell) out.push_back(&r);
    }
    return out;
  }
};

Experiment load_experiment(const fs::path& out) {
  Experiment e;
  e.plan = read_json(out / "experiment.json");
  for (const auto& c : e.plan.at("cells")) e.cells.push_back(c.at("name").get<std::string>());
  for (const auto& cell : e.cells) {
    for (const auto& s : e.plan.at("seeds")) {
      RunData r;
      r.cell = cell;
      r.seed = s.get<std::uint64_t>();
      r.dir = run_dir(out, cell, r.seed);
      r.manifest = read_json(r.dir / "manifest.json");
      e.runs.push_back(std::move(r));
    }
  }
  return e;
}

struct Series {
  std::vector<double> t, v;
};

/// One column of intersections.csv for one node.
Series node_series(const CsvTable& t, const std::string& node, const char* column) {
  Series s;
  const auto cn = t.column("node"), ct = t.column("t"), cv = t.column(column);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.at(i, cn) != node) continue;
    s.t.push_back(t.num(i, ct));
    s.v.push_back(t.num(i, cv));
  }
  return s;
}

std::vector<std::string> ci_cells(const Interval& iv) {
  return {std::to_string(iv.n), fmt(iv.mean), fmt(iv.lower()), fmt(iv.upper())};
}

std::vector<std::string> row_of(std::initializer_list<std::string> head, const std::vector<std::string>& tail) {
  std::vector<std::string> r(head);
  r.insert(r.end(), tail.begin(), tail.end());
  return r;
}

const std::vector<std::string> kCiHeader = {"runs", "mean", "ci95_low", "ci95_high"};

std::vector<std::string> header_with_ci(std::initializer_list<std::string> head) {
  std::vector<std::string> h(head);
  h.insert(h.end(), kCiHeader.begin(), kCiHeader.end());
  return h;
}

// ---------------------------------------------------------------- per-preset folds

SummaryTable run_overview(const Experiment& e) {
  SummaryTable t{"runs",
                 {"cell", "seed", "mode", "spawned", "completed", "partial", "mean_travel_s", "mean_delay_s",
                  "mean_normalized_delay", "final_moving_average_s", "requests", "rejections", "violations"},
                 {}};
  for (const auto& r : e.runs) {
    auto s = summarize_run_dir(r.dir);
    t.add({r.cell, std::to_string(r.seed), s.mode, std::to_string(s.spawned), std::to_string(s.completed),
           s.partial ? "1" : "0", fmt(s.mean_travel_s), fmt(s.mean_delay_s), fmt(s.mean_normalized_delay),
           fmt(s.final_moving_average_s), std::to_string(s.requests), std::to_string(s.rejections),
           std::to_string(s.violations)});
  }
  return t;
}

void fold_bid_delay(const Experiment& e, Summary& out) {
  SummaryTable t{"endowment_delay", header_with_ci({"endowment", "tracked_vehicles"}), {}};
  std::map<double, std::vector<double>> per_run;
  std::map<double, std::size_t> vehicles;
  for (const auto& r : e.runs) {
    const auto v = r.table("vehicles.csv");
    const auto cb = v.column("bid"), ct = v.column("tracked"), cc = v.column("completed"), cd = v.column("delay_s");
    std::map<double, std::pair<double, std::size_t>> acc;
    for (const auto& en : r.config().at("tracked").at("endowments")) acc[en.get<double>()];
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!is_true(v.at(i, ct)) || !is_true(v.at(i, cc))) continue;
      auto& a = acc[v.num(i, cb)];
      a.first += v.num(i, cd);
      ++a.second;
    }
    for (const auto& [b, a] : acc) {
      vehicles[b] += a.second;
      if (a.second > 0) per_run[b].push_back(a.first / static_cast<double>(a.second));
    }
  }
  for (const auto& [b, xs] : per_run) {
    t.add(row_of({fmt(b), std::to_string(vehicles[b])}, ci_cells(t_interval(xs))));
  }
  out.tables.push_back(std::move(t));
}

void fold_ca_vs_fcfs(const Experiment& e, Summary& out) {
  SummaryTable t{"policy_lambda",
                 {"mode", "lambda_per_min", "runs", "mean_delay_s", "delay_ci95_low", "delay_ci95_high",
                  "rejections", "rejections_ci95_low", "rejections_ci95_high", "requests"},
                 {}};
  for (const auto& cell : e.cells) {
    std::vector<double> delay, rej, req;
    std::string mode;
    double lambda = 0.0;
    for (const auto* r : e.of(cell)) {
      const auto s = summarize_run_dir(r->dir);
      delay.push_back(s.mean_delay_s);
      rej.push_back(static_cast<double>(s.rejections));
      req.push_back(static_cast<double>(s.requests));
      mode = r->mode();
      lambda = r->lambda();
    }
    const auto d = t_interval(delay), j = t_interval(rej), q = t_interval(req);
    t.add({mode, fmt(lambda), std::to_string(d.n), fmt(d.mean), fmt(d.lower()), fmt(d.upper()), fmt(j.mean),
           fmt(j.lower()), fmt(j.upper()), fmt(q.mean)});
  }
  out.tables.push_back(std::move(t));
}

void fold_reservation_distance(const Experiment& e, Summary& out) {
  SummaryTable t{"distance_lambda", header_with_ci({"lambda_per_min"}), {}};
  SummaryTable series{"distance_series", {"lambda_per_min", "t", "mean_d_i_m"}, {}};
  for (const auto& cell : e.cells) {
    std::vector<double> steady;
    std::map<double, std::pair<double, int>> by_t;
    double lambda = 0.0;
    for (const auto* r : e.of(cell)) {
      lambda = r->lambda();
      const auto it = r->table("intersections.csv");
      const auto ct = it.column("t"), cd = it.column("mean_d_i");
      // Steady state: the last two thirds of the spawn window.
      const double from = r->window() / 3.0, to = r->window();
      double sum = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < it.size(); ++i) {
        const double tt = it.num(i, ct), d = it.num(i, cd);
        auto& b = by_t[tt];
        b.first += d;
        ++b.second;
        if (tt >= from && tt <= to) {
          sum += d;
          ++n;
        }
      }
      if (n > 0) steady.push_back(sum / n);
    }
    t.add(row_of({fmt(lambda)}, ci_cells(t_interval(steady))));
    for (const auto& [tt, b] : by_t) series.add({fmt(lambda), fmt(tt), fmt(b.first / b.second)});
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(series));
}

/// The intersection with the largest mean above-optimum density integral under the first cell.
std::string busiest_node(const Experiment& e) {
  std::map<std::string, double> total;
  for (const auto* r : e.of(e.cells.front())) {
    const auto it = r->table("intersections.csv");
    std::set<std::string> nodes;
    for (std::size_t i = 0; i < it.size(); ++i) nodes.insert(it.at(i, it.column("node")));
    for (const auto& n : nodes) {
      const auto s = node_series(it, n, "peak_link_density");
      total[n] += engine::density_integral_above_opt(s.t, s.v, r->mu_opt());
    }
  }
  std::string best;
  double top = -1.0;
  for (const auto& [n, v] : total) {
    if (v > top) {
      top = v;
      best = n;
    }
  }
  return best;
}

void fold_grid(const Experiment& e, Summary& out, bool buckets) {
  const std::string node = busiest_node(e);
  // Density integral at the busiest intersection, one common window per seed over all policies.
  SummaryTable integral{"density_integral", header_with_ci({"mode", "node"}), {}};
  SummaryTable dseries{"density_series", {"mode", "node", "t", "peak_link_density"}, {}};
  std::map<std::string, std::vector<double>> by_mode;
  std::map<std::string, std::map<double, std::pair<double, int>>> dens_t;
  for (const auto& s : e.plan.at("seeds")) {
    const auto seed = s.get<std::uint64_t>();
    std::vector<std::pair<std::string, Series>> curves;
    engine::Window w;
    double mu_opt = 0.0;
    for (const auto& r : e.runs) {
      if (r.seed != seed) continue;
      auto series = node_series(r.table("intersections.csv"), node, "peak_link_density");
      mu_opt = r.mu_opt();
      w = engine::common_window(w, engine::above_window(series.t, series.v, mu_opt));
      for (std::size_t i = 0; i < series.t.size(); ++i) {
        auto& b = dens_t[r.cell][series.t[i]];
        b.first += series.v[i];
        ++b.second;
      }
      curves.emplace_back(r.cell, std::move(series));
    }
    for (const auto& [cell, series] : curves) {
      by_mode[cell].push_back(engine::density_integral(series.t, series.v, mu_opt, w));
    }
  }
  for (const auto& cell : e.cells) {
    integral.add(row_of({cell, node}, ci_cells(t_interval(by_mode[cell]))));
    for (const auto& [tt, b] : dens_t[cell]) dseries.add({cell, node, fmt(tt), fmt(b.first / b.second)});
  }
  if (by_mode.count("fcfs") && by_mode.count("cta")) {
    const double f = t_interval(by_mode["fcfs"]).mean, c = t_interval(by_mode["cta"]).mean;
    out.notes.push_back("density integral at " + node + ": cta is " + fmt(100.0 * (1.0 - c / f)) +
                        "% lower than fcfs");
  }
  out.tables.push_back(std::move(integral));
  out.tables.push_back(std::move(dseries));

  // Moving average of travel time.
  SummaryTable final_ma{"final_moving_average", header_with_ci({"mode"}), {}};
  SummaryTable ma_series{"moving_average_series", {"mode", "t", "average_s"}, {}};
  for (const auto& cell : e.cells) {
    std::vector<double> finals;
    std::vector<Series> curves;
    double end = 0.0;
    for (const auto* r : e.of(cell)) {
      const auto m = r->table("moving_average.csv");
      Series s;
      for (std::size_t i = 0; i < m.size(); ++i) {
        s.t.push_back(m.num(i, m.column("t")));
        s.v.push_back(m.num(i, m.column("average_s")));
      }
      if (!s.v.empty()) {
        finals.push_back(s.v.back());
        end = std::max(end, s.t.back());
      }
      curves.push_back(std::move(s));
    }
    final_ma.add(row_of({cell}, ci_cells(t_interval(finals))));
    for (double tt = kSeriesStepS; tt < end + kSeriesStepS; tt += kSeriesStepS) {
      double sum = 0.0;
      for (const auto& s : curves) {
        auto it = std::upper_bound(s.t.begin(), s.t.end(), tt);
        sum += it == s.t.begin() ? 0.0 : s.v[static_cast<std::size_t>(it - s.t.begin()) - 1];
      }
      ma_series.add({cell, fmt(tt), fmt(sum / static_cast<double>(curves.size()))});
    }
  }
  out.tables.push_back(std::move(final_ma));
  out.tables.push_back(std::move(ma_series));

  // Mean travel time per OD pair, pooled over seeds (informational).
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::pair<double, int>>> od;
  for (const auto& r : e.runs) {
    const auto v = r.table("vehicles.csv");
    const auto co = v.column("origin"), cd = v.column("destination"), cc = v.column("completed"),
               ct = v.column("travel_s");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!is_true(v.at(i, cc))) continue;
      auto& a = od[{v.at(i, co), v.at(i, cd)}][r.cell];
      a.first += v.num(i, ct);
      ++a.second;
    }
  }
  std::vector<std::string> header = {"origin", "destination"};
  for (const auto& cell : e.cells) header.push_back(cell + "_travel_s");
  for (const auto& cell : e.cells) {
    if (cell != "fcfs") header.push_back(cell + "_change_pct");
  }
  SummaryTable odt{"od_travel", header, {}};
  std::map<std::string, std::pair<int, int>> improved;
  for (const auto& [pair, cells] : od) {
    std::vector<std::string> row = {pair.first, pair.second};
    std::map<std::string, double> mean;
    for (const auto& cell : e.cells) {
      auto it = cells.find(cell);
      mean[cell] = it == cells.end() ? std::nan("") : it->second.first / it->second.second;
      row.push_back(fmt(mean[cell]));
    }
    for (const auto& cell : e.cells) {
      if (cell == "fcfs") continue;
      const double change = 100.0 * (mean[cell] - mean["fcfs"]) / mean["fcfs"];
      row.push_back(fmt(change));
      if (std::isfinite(change)) {
        ++improved[cell].second;
        if (change < 0) ++improved[cell].first;
      }
    }
    odt.add(std::move(row));
  }
  for (const auto& [cell, c] : improved) {
    out.notes.push_back(cell + " is faster than fcfs on " + std::to_string(c.first) + " of " +
                        std::to_string(c.second) + " OD pairs");
  }
  out.tables.push_back(std::move(odt));

  if (!buckets) return;
  // Normalized delay by bid bucket under ca-cta; the statistic is the per-run bucket mean.
  SummaryTable bt{"bid_buckets", header_with_ci({"bucket", "vehicles"}), {}};
  constexpr double kWidth = 50.0;
  constexpr int kBuckets = 4;
  std::vector<std::vector<double>> per_run(kBuckets);
  std::vector<std::size_t> count(kBuckets, 0);
  for (const auto* r : e.of("ca-cta")) {
    const auto v = r->table("vehicles.csv");
    const auto cb = v.column("bid"), cc = v.column("completed"), cn = v.column("normalized_delay");
    std::vector<std::pair<double, int>> acc(kBuckets);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!is_true(v.at(i, cc))) continue;
      const double b = v.num(i, cb);
      const int k = b >= kBuckets * kWidth ? kBuckets - 1 : static_cast<int>(b / kWidth);
      if (b > kBuckets * kWidth || k < 0) continue;
      acc[k].first += v.num(i, cn);
      ++acc[k].second;
    }
    for (int k = 0; k < kBuckets; ++k) {
      count[k] += static_cast<std::size_t>(acc[k].second);
      if (acc[k].second > 0) per_run[k].push_back(acc[k].first / acc[k].second);
    }
  }
  for (int k = 0; k < kBuckets; ++k) {
    const std::string label = num_label(k * kWidth) + "-" + num_label((k + 1) * kWidth);
    bt.add(row_of({label, std::to_string(count[k])}, ci_cells(t_interval(per_run[k]))));
  }
  out.tables.push_back(std::move(bt));
}

// ---------------------------------------------------------------- execution

void run_in_process(const Plan& plan, const Cell& cell, std::uint64_t seed, const fs::path& dir) {
  const auto cfg = engine::make_config(plan.scenario.config, plan.overrides(cell, seed));
  engine::Network net(plan.scenario, cfg.tick_s);
  engine::write_results(engine::run(net, cfg), dir);
}

pid_t spawn_child(const std::string& self, const std::vector<std::string>& args) {
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(self.c_str()));
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, 1, "/dev/null", O_WRONLY, 0);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, self.c_str(), &fa, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  if (rc != 0) throw std::runtime_error("cannot start " + self);
  return pid;
}

void wait_child(pid_t pid, const std::string& what) {
  int status = 0;
  if (waitpid(pid, &status, 0) < 0) throw std::runtime_error("lost child process for " + what);
  // Exit status 3 flags a partial run; its outputs are still complete.
  if (!WIFEXITED(status) || (WEXITSTATUS(status) != 0 && WEXITSTATUS(status) != 3)) {
    throw std::runtime_error("run " + what + " failed");
  }
}

}  // namespace

// ---------------------------------------------------------------- public API

RunSummary summarize_run_dir(const fs::path& dir) {
  RunSummary s;
  const auto m = read_json(dir / "manifest.json");
  s.scenario = m.at("scenario").get<std::string>();
  s.mode = m.at("mode").get<std::string>();
  s.seed = m.at("seed").get<std::uint64_t>();
  s.spawned = m.at("spawned").get<std::size_t>();
  s.completed = m.at("completed").get<std::size_t>();
  s.partial = m.at("partial").get<bool>();
  s.violations = m.at("violations").get<long>();
  s.revenue = m.at("revenue").get<double>();
  s.spending = m.at("spending").get<double>();
  const auto v = CsvTable::read(dir / "vehicles.csv");
  const auto cc = v.column("completed"), ct = v.column("travel_s"), cd = v.column("delay_s"),
             cn = v.column("normalized_delay"), cq = v.column("requests"), cr = v.column("rejections");
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s.requests += static_cast<long>(v.num(i, cq));
    s.rejections += static_cast<long>(v.num(i, cr));
    if (!is_true(v.at(i, cc))) continue;
    ++n;
    s.mean_travel_s += v.num(i, ct);
    s.mean_delay_s += v.num(i, cd);
    s.mean_normalized_delay += v.num(i, cn);
  }
  if (n > 0) {
    s.mean_travel_s /= static_cast<double>(n);
    s.mean_delay_s /= static_cast<double>(n);
    s.mean_normalized_delay /= static_cast<double>(n);
  }
  const auto ma = CsvTable::read(dir / "moving_average.csv");
  if (ma.size() > 0) s.final_moving_average_s = ma.num(ma.size() - 1, ma.column("average_s"));
  return s;
}

std::string format_run_summary(const RunSummary& s) {
  std::ostringstream os;
  os << "scenario " << s.scenario << "  mode " << s.mode << "  seed " << s.seed << '\n'
     << "vehicles " << s.completed << "/" << s.spawned << " completed" << (s.partial ? " (partial)" : "") << '\n'
     << "mean travel " << fmt(s.mean_travel_s) << " s  mean delay " << fmt(s.mean_delay_s)
     << " s  mean normalized delay " << fmt(s.mean_normalized_delay) << '\n'
     << "final moving average " << fmt(s.final_moving_average_s) << " s\n"
     << "requests " << s.requests << "  rejections " << s.rejections << "  violations " << s.violations << '\n'
     << "revenue " << fmt(s.revenue) << "  spending " << fmt(s.spending) << '\n';
  return os.str();
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"bid-delay", "ca-vs-fcfs", "reservation-distance", "cta-grid",
                                                 "ca-cta-grid"};
  return names;
}

std::vector<std::string> Plan::overrides(const Cell& cell, std::uint64_t seed) const {
  std::vector<std::string> o = common;
  o.insert(o.end(), cell.overrides.begin(), cell.overrides.end());
  o.insert(o.end(), user.begin(), user.end());
  o.push_back("seed=" + std::to_string(seed));
  return o;
}

json Plan::to_json() const {
  json cells = json::array();
  for (const auto& c : this->cells) cells.push_back({{"name", c.name}, {"overrides", c.overrides}});
  return {{"version", engine::kVersion}, {"preset", preset}, {"scenario", "scenario.json"},
          {"common", common},            {"user", user},     {"cells", cells},
          {"seeds", seeds}};
}

Plan make_plan(const ExperimentOptions& o) {
  if (o.seeds < 1) throw ConfigError("--seeds must be positive");
  Plan p = preset_plan(o.preset);
  if (!o.scenario.empty()) {
    auto config = p.scenario.config;
    p.scenario = roadnet::read_scenario_file(o.scenario);
    if (p.scenario.config.empty()) p.scenario.config = config;
  }
  p.user = o.overrides;
  for (int i = 0; i < o.seeds; ++i) p.seeds.push_back(o.first_seed + static_cast<std::uint64_t>(i));
  // Validate every run's configuration before anything is written.
  for (const auto& c : p.cells) engine::make_config(p.scenario.config, p.overrides(c, p.seeds.front()));
  return p;
}

fs::path run_dir(const fs::path& out, const std::string& cell, std::uint64_t seed) {
  return out / "runs" / cell / ("seed-" + std::to_string(seed));
}

void execute_plan(const Plan& plan, const fs::path& out, int jobs, const std::string& self, std::ostream& log) {
  fs::create_directories(out);
  std::ofstream(out / "experiment.json") << plan.to_json().dump(2) << '\n';
  roadnet::write_scenario_file(plan.scenario, (out / "scenario.json").string());
  struct Job {
    const Cell* cell;
    std::uint64_t seed;
  };
  std::deque<Job> queue;
  for (const auto& c : plan.cells) {
    for (auto s : plan.seeds) queue.push_back({&c, s});
  }
  const std::size_t total = queue.size();
  std::size_t done = 0;
  auto label = [](const Job& j) { return j.cell->name + " seed " + std::to_string(j.seed); };
  if (jobs <= 1 || self.empty()) {
    for (const auto& j : queue) {
      run_in_process(plan, *j.cell, j.seed, run_dir(out, j.cell->name, j.seed));
      log << "[" << ++done << "/" << total << "] " << label(j) << '\n';
    }
    return;
  }
  std::map<pid_t, Job> running;
  while (!queue.empty() || !running.empty()) {
    while (!queue.empty() && running.size() < static_cast<std::size_t>(jobs)) {
      const Job j = queue.front();
      queue.pop_front();
      std::vector<std::string> args = {"run", "--scenario", (out / "scenario.json").string(), "--out",
                                       run_dir(out, j.cell->name, j.seed).string()};
      for (const auto& o : plan.overrides(*j.cell, j.seed)) {
        args.push_back("--set");
        args.push_back(o);
      }
      running.emplace(spawn_child(self, args), j);
    }
    int status = 0;
    const pid_t pid = wait(&status);
    auto it = running.find(pid);
    if (it == running.end()) continue;
    const Job j = it->second;
    running.erase(it);
    if (!WIFEXITED(status) || (WEXITSTATUS(status) != 0 && WEXITSTATUS(status) != 3)) {
      for (const auto& [p, other] : running) wait_child(p, label(other));
      throw std::runtime_error("run " + label(j) + " failed");
    }
    log << "[" << ++done << "/" << total << "] " << label(j) << '\n';
  }
}

const SummaryTable& Summary::table(std::string_view name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no summary table '" + std::string(name) + "'");
}

Summary summarize_experiment(const fs::path& out) {
  const auto e = load_experiment(out);
  Summary s;
  s.tables.push_back(run_overview(e));
  const auto preset = e.plan.at("preset").get<std::string>();
  if (preset == "bid-delay") {
    fold_bid_delay(e, s);
  } else if (preset == "ca-vs-fcfs") {
    fold_ca_vs_fcfs(e, s);
  } else if (preset == "reservation-distance") {
    fold_reservation_distance(e, s);
  } else if (preset == "cta-grid") {
    fold_grid(e, s, false);
  } else if (preset == "ca-cta-grid") {
    fold_grid(e, s, true);
  } else {
    throw ConfigError("unknown preset '" + preset + "' in " + (out / "experiment.json").string());
  }
  for (const auto& r : e.runs) {
    if (r.manifest.at("partial").get<bool>()) {
      s.notes.push_back("partial run: " + r.cell + " seed " + std::to_string(r.seed));
    }
  }
  return s;
}

void write_summary(const Summary& s, const fs::path& out, std::ostream& os) {
  for (const auto& t : s.tables) {
    t.write_csv(out / "summary");
    if (t.name != "runs" && t.name.find("series") == std::string::npos) {
      t.print(os);
      os << '\n';
    }
  }
  std::ofstream notes(out / "summary" / "notes.txt");
  for (const auto& n : s.notes) {
    notes << n << '\n';
    os << n << '\n';
  }
}

int run_experiment(const ExperimentOptions& o, std::ostream& os) {
  const Plan plan = make_plan(o);
  execute_plan(plan, o.out, o.jobs, o.self, os);
  write_summary(summarize_experiment(o.out), o.out, os);
  return 0;
}

int summarize_dir(const fs::path& dir, std::ostream& os) {
  if (fs::exists(dir / "experiment.json")) {
    write_summary(summarize_experiment(dir), dir, os);
    return 0;
  }
  if (fs::exists(dir / "manifest.json")) {
    os << format_run_summary(summarize_run_dir(dir));
    return 0;
  }
  throw std::runtime_error(dir.string() + " holds neither experiment.json nor manifest.json");
}

}  // namespace intersim::cli
