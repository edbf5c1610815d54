#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "intersim/rng.hpp"

namespace intersim::engine {

/// Travel time minus the unhindered time, floored at 0.
double delay(double travel_s, double unhindered_s);

/// (T - m_T) / m_T. Throws std::invalid_argument unless m_T > 0.
double normalized_delay(double travel_s, double shortest_s);

/// Running mean after the (n+1)-th value: avg + (value - avg) / (n + 1).
double moving_average_update(double avg, double value, std::size_t n);

/// Sample-time interval over which a density curve lies above the optimum.
struct Window {
  double t1 = 0.0;
  double t2 = 0.0;
  bool empty = true;
};

/// First to last sample strictly above `mu_opt`.
Window above_window(std::span<const double> t, std::span<const double> mu, double mu_opt);
/// Smallest window covering both.
Window common_window(const Window& a, const Window& b);

/// Trapezoidal integral of max(mu, mu_opt) over the window, times in seconds, result in
/// density-hours (veh h / km). Equals the excess above the optimum plus mu_opt (t2 - t1).
double density_integral(std::span<const double> t, std::span<const double> mu, double mu_opt, const Window& w);
/// The same over the curve's own window; 0 when it never exceeds the optimum.
double density_integral_above_opt(std::span<const double> t, std::span<const double> mu, double mu_opt);

/// Arrivals during one tick of a Poisson process of `rate_per_min`; each arrival is assigned a
/// uniformly drawn index below `pairs`.
std::vector<std::size_t> spawn_poisson(double rate_per_min, std::size_t pairs, RngEngine& arrivals, RngEngine& choice,
                                       double tick_s);

}  // namespace intersim::engine
