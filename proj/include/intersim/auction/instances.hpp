#pragma once

#include <vector>

#include "intersim/auction/wdp.hpp"
#include "intersim/isect/geometry.hpp"

namespace intersim::auction {

struct InstanceShape {
  double arrivals_per_s = 4.0;  // bid arrival density over the time window
  double min_speed = 4.0;
  double max_speed = 14.0;
  double value_mean = 100.0;
  double value_sd = 25.0;
};

/// Random round of bids on a real intersection: uniform approach, turn and permitted lane,
/// arrival times spread over n / arrivals_per_s seconds, values N(mean, sd) truncated at 0.
std::vector<WdpBid> intersection_instance(const isect::IntersectionGeometry& geo, std::size_t n,
                                          const InstanceShape& shape, RngEngine& rng);

/// Wall-clock passes per second of the stochastic search on 80-bid rounds of the default
/// three-lane intersection, measured for about `seconds`.
double calibrate_passes_per_second(double seconds, std::uint64_t seed);

}  // namespace intersim::auction
