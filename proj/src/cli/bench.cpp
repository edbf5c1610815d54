#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "intersim/auction/instances.hpp"
#include "intersim/cli/experiments.hpp"
#include "intersim/cli/stats.hpp"
#include "intersim/engine/config.hpp"
#include "intersim/roadnet/presets.hpp"

namespace intersim::cli {

namespace {
constexpr std::size_t kExactCap = 256;
constexpr double kCalibrateSeconds = 2.0;
}  // namespace

BenchResult wdp_bench(const BenchOptions& o) {
  if (o.min_bids < 1 || o.min_bids > o.max_bids) throw ConfigError("need 1 <= --min-bids <= --max-bids");
  if (o.max_bids > kExactCap) throw ConfigError("--max-bids is limited to " + std::to_string(kExactCap));
  for (const auto& s : o.overrides) {
    if (s.rfind("wdp.", 0) != 0) throw ConfigError("wdp-bench only accepts wdp.* overrides, got '" + s + "'");
  }
  const auto cfg = engine::make_config(nlohmann::json::object(), o.overrides);
  auto graph = roadnet::load_network(roadnet::single_intersection_document(3, 200.0));
  isect::IntersectionGeometry geo(graph, graph.node_index("C"));

  BenchResult r;
  r.budget_passes = cfg.auction.wdp.passes;
  auto sizes = make_stream(o.seed, "bench-size");
  std::uniform_int_distribution<std::size_t> size(o.min_bids, o.max_bids);
  for (int i = 0; i < o.instances; ++i) {
    auto rng = make_stream(o.seed, "bench-instance", static_cast<std::uint64_t>(i));
    auction::BidSet set(auction::intersection_instance(geo, size(sizes), auction::InstanceShape{}, rng));
    BenchInstance b;
    b.bids = set.size();
    b.exact = auction::wdp_exact_value(set, kExactCap);
    auto params = cfg.auction.wdp;
    params.known_optimum = b.exact;
    auto search = make_stream(o.seed, "bench-search", static_cast<std::uint64_t>(i));
    const auto w = auction::wdp_stochastic(set, params, search);
    b.stochastic = w.value;
    b.passes = w.passes;
    b.ratio = b.exact > 0.0 ? b.stochastic / b.exact : 1.0;
    if (b.ratio >= 0.95) ++r.within_95;
    r.instances.push_back(b);
  }
  return r;
}

int run_wdp_bench(const BenchOptions& o, std::ostream& os) {
  const auto r = wdp_bench(o);
  std::vector<double> ratios;
  std::uint64_t passes = 0;
  for (const auto& b : r.instances) {
    ratios.push_back(b.ratio);
    passes += b.passes;
  }
  const auto iv = t_interval(ratios);
  const double n = static_cast<double>(r.instances.size());
  os << "instances " << r.instances.size() << "  bids " << o.min_bids << "-" << o.max_bids << "  budget "
     << r.budget_passes << " passes\n"
     << "within 95% of optimum: " << r.within_95 << "/" << r.instances.size() << " ("
     << fmt(100.0 * static_cast<double>(r.within_95) / n) << "%)\n"
     << "mean ratio " << fmt(iv.mean) << "  95% CI [" << fmt(iv.lower()) << ", " << fmt(iv.upper()) << "]  min "
     << fmt(*std::min_element(ratios.begin(), ratios.end())) << '\n'
     << "mean passes used " << fmt(static_cast<double>(passes) / n) << '\n';
  if (o.calibrate) {
    const double rate = auction::calibrate_passes_per_second(kCalibrateSeconds, o.seed);
    os << "calibration: " << fmt(rate) << " passes per second on 80-bid rounds\n";
  }
  return 0;
}

}  // namespace intersim::cli
