#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "intersim/auction/round.hpp"
#include "intersim/driver/driver.hpp"
#include "intersim/engine/config.hpp"
#include "intersim/isect/geometry.hpp"
#include "intersim/roadnet/network.hpp"

namespace intersim::engine {

/// One row per spawned vehicle. Unfinished vehicles have completed = false and NaN times.
struct VehicleRow {
  std::uint32_t id = 0;
  std::string origin, destination;
  double spawn_s = 0.0;
  double finish_s = 0.0;
  double travel_s = 0.0;
  double unhindered_s = 0.0;  // ghost run on the route actually driven
  double delay_s = 0.0;
  double shortest_s = 0.0;    // ghost run on the free-flow shortest route
  double normalized_delay = 0.0;
  Money bid = 0.0;            // valuation b
  Money spent = 0.0;
  bool tracked = false;
  bool completed = false;
  int requests = 0;
  int rejections = 0;
  std::string route;
};

struct LinkSample {
  double t = 0.0;
  std::string link;
  int vehicles = 0;
  double density = 0.0;  // veh / km / lane
};

struct IntersectionSample {
  double t = 0.0;
  std::string node;
  double density = 0.0;   // over all incoming links
  double peak_link_density = 0.0;  // most loaded incoming link
  double mean_d_i = 0.0;  // per-lane d_i capped at the longest incoming link
  long requests = 0;      // cumulative
  long rejections = 0;    // cumulative
  Money revenue = 0.0;    // cumulative
};

struct PriceRow {
  double t = 0.0;
  std::string node, link;
  Money price = 0.0;
  double demand = 0.0;
  double supply = 0.0;
};

struct AuctionRow {
  double t = 0.0;
  std::string node;
  auction::RoundStats stats;
};

struct MovingAverageRow {
  double t = 0.0;
  std::uint32_t vehicle = 0;
  double travel_s = 0.0;
  double average_s = 0.0;
};

struct RunResults {
  std::string scenario;
  ScenarioConfig config;
  std::vector<VehicleRow> vehicles;
  std::vector<LinkSample> links;
  std::vector<IntersectionSample> intersections;
  std::vector<PriceRow> prices;
  std::vector<AuctionRow> auctions;
  std::vector<MovingAverageRow> moving_average;
  std::vector<std::string> messages;
  long ticks = 0;
  double end_s = 0.0;
  std::size_t spawned = 0;
  std::size_t completed = 0;
  long violations = 0;  // reservations abandoned because a vehicle fell off its schedule
  long cancellations = 0;  // reservations dropped because the vehicle ahead lost its booking
  Money spending = 0.0;
  Money revenue = 0.0;
  bool partial = false;  // horizon reached with vehicles still in the network
};

/// Immutable per-network data shared by a run and its ghost runs.
class Network {
 public:
  Network(roadnet::ScenarioDocument doc, double tick_s);

  const roadnet::ScenarioDocument& document() const { return doc_; }
  const roadnet::NetworkGraph& graph() const { return graph_; }
  bool micro() const { return micro_; }
  const isect::IntersectionGeometry& geometry(NodeIndex n) const { return *geo_.at(n.value); }
  bool has_geometry(NodeIndex n) const { return n.value < geo_.size() && geo_[n.value] != nullptr; }
  driver::RouteCache& routes(std::size_t k);

 private:
  roadnet::ScenarioDocument doc_;
  roadnet::NetworkGraph graph_;
  bool micro_;
  std::vector<std::unique_ptr<isect::IntersectionGeometry>> geo_;
  std::vector<std::pair<std::size_t, std::unique_ptr<driver::RouteCache>>> caches_;
};

/// Runs a scenario to completion (spawn window closed and network drained, or horizon reached).
RunResults run(Network& net, const ScenarioConfig& config);
RunResults run(const roadnet::ScenarioDocument& doc, const ScenarioConfig& config);

/// Travel time of one vehicle alone on an empty network along a fixed route; NaN if it cannot finish.
double ghost_travel_time(Network& net, const ScenarioConfig& config, const roadnet::Route& route,
                         const driver::DriverProfile& profile, int lane);

}  // namespace intersim::engine
