#include "intersim/auction/instances.hpp"

#include <limits>
#include <random>

#include "intersim/roadnet/presets.hpp"

namespace intersim::auction {

std::vector<WdpBid> intersection_instance(const isect::IntersectionGeometry& geo, std::size_t n,
                                          const InstanceShape& shape, RngEngine& rng) {
  std::vector<WdpBid> bids;
  bids.reserve(n);
  const double span = std::max(1.0, static_cast<double>(n) / shape.arrivals_per_s);
  std::uniform_real_distribution<double> arrival(1.0, 1.0 + span);
  std::uniform_real_distribution<double> speed(shape.min_speed, shape.max_speed);
  std::normal_distribution<double> value(shape.value_mean, shape.value_sd);
  std::uniform_int_distribution<int> approach(0, static_cast<int>(geo.approaches().size()) - 1);
  while (bids.size() < n) {
    int a = approach(rng);
    auto turn = static_cast<Turn>(std::uniform_int_distribution<int>(0, 2)(rng));
    auto lanes = geo.lanes_for(a, turn);
    if (lanes.empty()) continue;
    int lane = lanes[std::uniform_int_distribution<std::size_t>(0, lanes.size() - 1)(rng)];
    double t_a = arrival(rng);
    double v_a = speed(rng);
    double v = value(rng);
    while (v < 0) v = value(rng);
    auto tiles = geo.trajectory_tiles(geo.movement(a, lane, turn), t_a, v_a);
    bids.push_back({bids.size() + 1, v, isect::to_items(tiles)});
  }
  return bids;
}

double calibrate_passes_per_second(double seconds, std::uint64_t seed) {
  auto graph = roadnet::load_network(roadnet::single_intersection_document(3, 200.0));
  isect::IntersectionGeometry geo(graph, graph.node_index("C"));
  constexpr int kInstances = 5;
  std::uint64_t passes = 0;
  for (int i = 0; i < kInstances; ++i) {
    auto rng = make_stream(seed, "calibrate", static_cast<std::uint64_t>(i));
    BidSet set(intersection_instance(geo, 80, InstanceShape{}, rng));
    StochasticParams p;
    p.known_optimum = std::numeric_limits<Money>::infinity();
    passes += wdp_stochastic_timed(set, seconds / kInstances, p, rng).passes;
  }
  return static_cast<double>(passes) / seconds;
}

}  // namespace intersim::auction
