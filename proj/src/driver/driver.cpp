#include "intersim/driver/driver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace intersim::driver {

using roadnet::Route;

DriverProfile sample_driver(RngEngine& rng, NodeIndex origin, NodeIndex destination, const PopulationParams& params) {
  DriverProfile p;
  p.origin = origin;
  p.destination = destination;
  std::normal_distribution<double> speed(params.speed_mean_kmh, params.speed_sd_kmh);
  double kmh = speed(rng);
  while (kmh < params.speed_min_kmh || kmh > params.speed_max_kmh) kmh = speed(rng);
  p.preferred_speed = kmh * kKmhToMps;
  p.w_time = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::normal_distribution<double> bid(params.bid_mean, params.bid_sd);
  double b = bid(rng);
  while (b < 0.0) b = bid(rng);
  p.valuation = b;
  return p;
}

ChoiceSet make_choice_set(const roadnet::NetworkGraph& g, std::vector<Route> routes, const roadnet::PriceView& prices) {
  ChoiceSet set;
  set.routes = std::move(routes);
  for (const auto& r : set.routes) set.prices.push_back(roadnet::route_price(g, r, prices));
  if (set.routes.empty()) return set;
  auto [tmin, tmax] = std::minmax_element(set.routes.begin(), set.routes.end(),
                                          [](const Route& a, const Route& b) { return a.free_flow_s < b.free_flow_s; });
  set.min_time = tmin->free_flow_s;
  set.max_time = tmax->free_flow_s;
  auto [kmin, kmax] = std::minmax_element(set.prices.begin(), set.prices.end());
  set.min_price = *kmin;
  set.max_price = *kmax;
  return set;
}

namespace {

double normalised(double max, double min, double x) { return max == min ? 1.0 : (max - x) / (max - min); }

}  // namespace

double route_utility(const ChoiceSet& set, std::size_t i, const DriverProfile& p) {
  const double u_t = normalised(set.max_time, set.min_time, set.routes.at(i).free_flow_s);
  const double u_k = normalised(set.max_price, set.min_price, set.prices.at(i));
  return p.w_time * u_t + p.w_cost() * u_k;
}

std::size_t choose_route_cta(const roadnet::NetworkGraph& g, const ChoiceSet& set, const DriverProfile& p) {
  if (set.empty()) throw std::invalid_argument("empty choice set");
  std::size_t best = 0;
  double best_u = route_utility(set, 0, p);
  for (std::size_t i = 1; i < set.size(); ++i) {
    const double u = route_utility(set, i, p);
    if (u > best_u || (u == best_u && roadnet::route_less(g, set.routes[i], set.routes[best]))) {
      best = i;
      best_u = u;
    }
  }
  return best;
}

BudgetChoice choose_route_ca_cta(const roadnet::NetworkGraph& g, std::span<const Route> routes,
                                 const roadnet::PriceView& reserve, const DriverProfile& p) {
  if (routes.empty()) throw std::invalid_argument("empty route list");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    if (roadnet::route_max_price(g, routes[i], reserve) > p.valuation) continue;
    if (!best || roadnet::route_less(g, routes[i], routes[*best])) best = i;
  }
  if (best) return {*best, false};
  std::size_t fb = 0;
  Money fb_max = roadnet::route_max_price(g, routes[0], reserve);
  for (std::size_t i = 1; i < routes.size(); ++i) {
    const Money m = roadnet::route_max_price(g, routes[i], reserve);
    if (m < fb_max || (m == fb_max && roadnet::route_less(g, routes[i], routes[fb]))) {
      fb = i;
      fb_max = m;
    }
  }
  return {fb, true};
}

const std::vector<Route>& RouteCache::from_node(NodeIndex origin, NodeIndex destination) {
  auto key = std::make_pair(origin.value, destination.value);
  auto it = by_node_.find(key);
  if (it != by_node_.end()) return it->second;
  std::vector<Route> routes;
  try {
    routes = roadnet::k_shortest_routes(*g_, origin, destination, k_);
  } catch (const roadnet::NoRouteError&) {
  }
  return by_node_.emplace(key, std::move(routes)).first->second;
}

const std::vector<Route>& RouteCache::from_link(LinkIndex current, NodeIndex destination) {
  auto key = std::make_pair(current.value, destination.value);
  auto it = by_link_.find(key);
  if (it != by_link_.end()) return it->second;
  std::vector<Route> routes;
  try {
    routes = roadnet::k_shortest_routes_from_link(*g_, current, destination, k_);
  } catch (const roadnet::NoRouteError&) {
  }
  return by_link_.emplace(key, std::move(routes)).first->second;
}

namespace {

Route choose(const roadnet::NetworkGraph& g, const std::vector<Route>& routes, const roadnet::PriceView& prices,
             const DriverProfile& p, ChoiceRule rule) {
  switch (rule) {
    case ChoiceRule::ShortestTime:
      return routes.front();
    case ChoiceRule::Utility: {
      auto set = make_choice_set(g, routes, prices);
      return set.routes[choose_route_cta(g, set, p)];
    }
    case ChoiceRule::Budget:
      return routes[choose_route_ca_cta(g, routes, prices, p).index];
  }
  return routes.front();
}

}  // namespace

std::optional<Route> reevaluate_route(RouteCache& cache, LinkIndex current, const roadnet::PriceView& prices,
                                      const DriverProfile& p, ChoiceRule rule) {
  const auto& routes = cache.from_link(current, p.destination);
  if (routes.empty()) return std::nullopt;
  return choose(cache.graph(), routes, prices, p, rule);
}

Route choose_initial_route(RouteCache& cache, const roadnet::PriceView& prices, const DriverProfile& p, ChoiceRule rule) {
  const auto& routes = cache.from_node(p.origin, p.destination);
  if (routes.empty()) throw roadnet::NoRouteError("no route from origin to destination");
  return choose(cache.graph(), routes, prices, p, rule);
}

Money bid_value(const DriverProfile& p, Money reserve_floor) { return std::max(p.valuation, reserve_floor); }

bool needs_resubmission(double booked_t_a, double projected_t_a, double tolerance) {
  return std::abs(projected_t_a - booked_t_a) > tolerance;
}

}  // namespace intersim::driver
