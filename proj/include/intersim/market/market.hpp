#pragma once

#include <span>
#include <vector>

#include "intersim/roadnet/routes.hpp"

namespace intersim::market {

/// Greenshields diagram; densities in vehicles per km per lane.
struct FundamentalDiagram {
  double jam_density = 120.0;
  double free_speed = 50.0 / 3.6;  // m/s

  double optimal_density() const { return jam_density / 2.0; }
  double flow(double density) const;  // vehicles per hour per lane
};

/// v(mu) = v_free * max(0, 1 - mu / mu_jam).
double speed_density(double density, const FundamentalDiagram& fd);

struct Supply {
  double exact = 0.0;    // used as the divisor of the price update
  long long count = 0;   // exact rounded half-up, compared against vehicle counts
};

/// share * mu_opt * length(km) * lanes.
Supply supply(double length_m, int lanes, double optimal_density, double share = 0.5);

double excess_demand(double demand, double supply_count);

struct LinkMarketState {
  Money price = 0.0;
  Supply supply;
  double demand = 0.0;
  Money floor = 0.0;  // minimum price delta
};

/// p' = min(ceiling, max(floor, p + max(p, epsilon) * z / s)). With epsilon = 0 and an infinite
/// ceiling this is the plain tatonnement step. The ceiling keeps persistent excess demand, which
/// grows the price geometrically, from overflowing.
Money update_price(const LinkMarketState& state, Money epsilon, Money ceiling = kInfinity);

struct MarketParams {
  FundamentalDiagram diagram;
  double supply_share = 0.5;
  Money floor = 0.0;
  Money epsilon = 1.0;
  Money ceiling = 1e6;
  double cadence_s = 10.0;
};

/// Posted (or reserve) prices of every intersection incoming link.
class PriceBoard {
 public:
  PriceBoard(const roadnet::NetworkGraph& g, MarketParams params);

  /// One tatonnement step on every priced link; `demand` is indexed by link.
  void update(std::span<const double> demand);
  const roadnet::PriceView& view() const { return view_; }
  Money price(LinkIndex l) const { return view_.at(l); }
  const LinkMarketState& state(LinkIndex l) const { return states_.at(l.value); }
  const std::vector<LinkIndex>& priced_links() const { return priced_; }
  const MarketParams& params() const { return params_; }

 private:
  MarketParams params_;
  std::vector<LinkMarketState> states_;
  std::vector<LinkIndex> priced_;
  roadnet::PriceView view_;
};

}  // namespace intersim::market
