#include "intersim/engine/results.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace intersim::engine {
namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : os_(path) {
    if (!os_) throw std::runtime_error("cannot write " + path.string());
    os_ << header << '\n';
  }
  template <typename... Fields>
  void row(const Fields&... f) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(f), first = false), ...);
    os_ << '\n';
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string cell(I i) {
    return std::to_string(i);
  }
  std::ofstream os_;
};

}  // namespace

nlohmann::json manifest(const RunResults& r) {
  return {{"version", kVersion},
          {"scenario", r.scenario},
          {"seed", r.config.seed},
          {"mode", to_string(r.config.mode)},
          {"config", r.config.effective},
          {"ticks", r.ticks},
          {"end_s", r.end_s},
          {"spawned", r.spawned},
          {"completed", r.completed},
          {"violations", r.violations},
          {"cancellations", r.cancellations},
          {"spending", r.spending},
          {"revenue", r.revenue},
          {"partial", r.partial}};
}

void write_results(const RunResults& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    CsvFile f(dir / "vehicles.csv",
              "id,origin,destination,spawn_s,finish_s,travel_s,unhindered_s,delay_s,shortest_s,normalized_delay,"
              "bid,spent,tracked,completed,requests,rejections,route");
    for (const auto& v : r.vehicles) {
      f.row(v.id, v.origin, v.destination, v.spawn_s, v.finish_s, v.travel_s, v.unhindered_s, v.delay_s,
            v.shortest_s, v.normalized_delay, v.bid, v.spent, v.tracked, v.completed, v.requests, v.rejections,
            v.route);
    }
  }
  {
    CsvFile f(dir / "links.csv", "t,link,vehicles,density");
    for (const auto& s : r.links) f.row(s.t, s.link, s.vehicles, s.density);
  }
  {
    CsvFile f(dir / "intersections.csv", "t,node,density,peak_link_density,mean_d_i,requests,rejections,revenue");
    for (const auto& s : r.intersections) {
      f.row(s.t, s.node, s.density, s.peak_link_density, s.mean_d_i, s.requests, s.rejections, s.revenue);
    }
  }
  {
    CsvFile f(dir / "prices.csv", "t,node,link,price,demand,supply");
    for (const auto& p : r.prices) f.row(p.t, p.node, p.link, p.price, p.demand, p.supply);
  }
  {
    CsvFile f(dir / "auctions.csv", "t,node,submitted,contested,winners,value,upper_bound");
    for (const auto& a : r.auctions) {
      f.row(a.t, a.node, a.stats.submitted, a.stats.contested, a.stats.winners, a.stats.value, a.stats.upper_bound);
    }
  }
  {
    CsvFile f(dir / "moving_average.csv", "t,vehicle,travel_s,average_s");
    for (const auto& m : r.moving_average) f.row(m.t, m.vehicle, m.travel_s, m.average_s);
  }
  std::ofstream(dir / "manifest.json") << manifest(r).dump(2) << '\n';
  if (!r.messages.empty()) {
    std::ofstream log(dir / "messages.log");
    for (const auto& m : r.messages) log << m;
  }
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv("INTERSIM_OUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("out");
}

}  // namespace intersim::engine
