#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "intersim/rng.hpp"
#include "intersim/roadnet/routes.hpp"

namespace intersim::driver {

struct DriverProfile {
  double preferred_speed = 40.0 * kKmhToMps;  // m/s, within [30, 50] km/h
  double w_time = 0.5;                        // w_cost = 1 - w_time
  Money valuation = 100.0;                    // b, the bid per intersection
  Money wallet = 0.0;                         // money spent so far
  NodeIndex origin;
  NodeIndex destination;

  double w_cost() const { return 1.0 - w_time; }
};

/// Population distributions. Spreads are standard deviations.
struct PopulationParams {
  double speed_mean_kmh = 40.0;
  double speed_sd_kmh = 5.0;
  double speed_min_kmh = 30.0;
  double speed_max_kmh = 50.0;
  Money bid_mean = 100.0;
  Money bid_sd = 25.0;
};

/// Draws speed (truncated normal, by resampling), then w_T ~ U[0,1], then b (normal, resampled below 0).
DriverProfile sample_driver(RngEngine& rng, NodeIndex origin, NodeIndex destination,
                            const PopulationParams& params = {});

/// Candidate routes with their attributes and the normalisation bounds over the set.
struct ChoiceSet {
  std::vector<roadnet::Route> routes;
  std::vector<Money> prices;
  double max_time = 0.0, min_time = 0.0;
  Money max_price = 0.0, min_price = 0.0;

  bool empty() const { return routes.empty(); }
  std::size_t size() const { return routes.size(); }
};

ChoiceSet make_choice_set(const roadnet::NetworkGraph& g, std::vector<roadnet::Route> routes,
                          const roadnet::PriceView& prices);

/// w_T * u_T + w_K * u_K, each attribute normalised to [0,1] over the set; an attribute on which
/// every route ties scores 1.
double route_utility(const ChoiceSet& set, std::size_t i, const DriverProfile& p);

/// Utility maximiser; ties go to the shorter free-flow time, then to the lower route id.
/// Throws std::invalid_argument on an empty set.
std::size_t choose_route_cta(const roadnet::NetworkGraph& g, const ChoiceSet& set, const DriverProfile& p);

struct BudgetChoice {
  std::size_t index = 0;
  bool fallback = false;  // no route was affordable
};

/// Fastest route whose every priced link has reserve <= b. With none affordable, the route with
/// the smallest maximum reserve, ties by free-flow time. Routes must be in route order.
BudgetChoice choose_route_ca_cta(const roadnet::NetworkGraph& g, std::span<const roadnet::Route> routes,
                                 const roadnet::PriceView& reserve, const DriverProfile& p);

/// Memoised k-shortest route sets. They depend on topology only, so prices never invalidate them.
class RouteCache {
 public:
  explicit RouteCache(const roadnet::NetworkGraph& g, std::size_t k = 10) : g_(&g), k_(k) {}

  /// Empty when the destination is unreachable.
  const std::vector<roadnet::Route>& from_node(NodeIndex origin, NodeIndex destination);
  const std::vector<roadnet::Route>& from_link(LinkIndex current, NodeIndex destination);
  const roadnet::NetworkGraph& graph() const { return *g_; }

 private:
  const roadnet::NetworkGraph* g_;
  std::size_t k_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<roadnet::Route>> by_node_, by_link_;
};

enum class ChoiceRule { ShortestTime, Utility, Budget };

/// Route choice from the link just entered; the result starts with `current`. Nothing when the
/// destination cannot be reached, in which case the caller keeps its route.
std::optional<roadnet::Route> reevaluate_route(RouteCache& cache, LinkIndex current, const roadnet::PriceView& prices,
                                               const DriverProfile& p, ChoiceRule rule);

/// Initial route choice at the origin. Throws NoRouteError when the destination is unreachable.
roadnet::Route choose_initial_route(RouteCache& cache, const roadnet::PriceView& prices, const DriverProfile& p,
                                    ChoiceRule rule);

/// The whole endowment is bid; if the route had to fall back to an unaffordable link the bid is
/// raised to that link's reserve so the driver can still be served.
Money bid_value(const DriverProfile& p, Money reserve_floor = 0.0);

/// A pending or confirmed request is refreshed once the projected arrival moves by more than this.
inline constexpr double kArrivalDriftS = 0.5;

bool needs_resubmission(double booked_t_a, double projected_t_a, double tolerance = kArrivalDriftS);

}  // namespace intersim::driver
