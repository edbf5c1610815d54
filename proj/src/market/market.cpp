#include "intersim/market/market.hpp"

#include <algorithm>
#include <cmath>

namespace intersim::market {

double FundamentalDiagram::flow(double density) const {
  return density * speed_density(density, *this) * 3.6;
}

double speed_density(double density, const FundamentalDiagram& fd) {
  return fd.free_speed * std::max(0.0, 1.0 - density / fd.jam_density);
}

Supply supply(double length_m, int lanes, double optimal_density, double share) {
  Supply s;
  s.exact = share * optimal_density * (length_m / 1000.0) * lanes;
  s.count = static_cast<long long>(std::floor(s.exact + 0.5));
  return s;
}

double excess_demand(double demand, double supply_count) { return demand - supply_count; }

Money update_price(const LinkMarketState& state, Money epsilon, Money ceiling) {
  const double z = excess_demand(state.demand, static_cast<double>(state.supply.count));
  const Money base = std::max(state.price, epsilon);
  return std::min(ceiling, std::max(state.floor, state.price + base * z / state.supply.exact));
}

PriceBoard::PriceBoard(const roadnet::NetworkGraph& g, MarketParams params) : params_(params) {
  if (!(params_.diagram.jam_density > 0)) throw ConfigError("jam density must be positive");
  if (params_.floor < 0) throw ConfigError("minimum price must be non-negative");
  if (!(params_.ceiling >= params_.floor)) throw ConfigError("price ceiling must not be below the floor");
  states_.resize(g.link_count());
  view_.by_link.assign(g.link_count(), 0.0);
  for (std::uint32_t i = 0; i < g.link_count(); ++i) {
    LinkIndex l(i);
    if (!g.is_incoming(l)) continue;
    priced_.push_back(l);
    auto& s = states_[i];
    s.supply = supply(g.link(l).length_m, g.link(l).lanes, params_.diagram.optimal_density(), params_.supply_share);
    s.floor = params_.floor;
    s.price = params_.floor;
    view_.by_link[i] = s.price;
  }
}

void PriceBoard::update(std::span<const double> demand) {
  for (LinkIndex l : priced_) {
    auto& s = states_[l.value];
    s.demand = demand[l.value];
    s.price = update_price(s, params_.epsilon, params_.ceiling);
    view_.by_link[l.value] = s.price;
  }
}

}  // namespace intersim::market
