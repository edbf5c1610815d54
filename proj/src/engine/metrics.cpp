#include "intersim/engine/metrics.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace intersim::engine {

double delay(double travel_s, double unhindered_s) { return std::max(0.0, travel_s - unhindered_s); }

double normalized_delay(double travel_s, double shortest_s) {
  if (!(shortest_s > 0)) throw std::invalid_argument("shortest travel time must be positive");
  return (travel_s - shortest_s) / shortest_s;
}

double moving_average_update(double avg, double value, std::size_t n) {
  return avg + (value - avg) / static_cast<double>(n + 1);
}

Window above_window(std::span<const double> t, std::span<const double> mu, double mu_opt) {
  Window w;
  for (std::size_t i = 0; i < t.size() && i < mu.size(); ++i) {
    if (mu[i] <= mu_opt) continue;
    if (w.empty) w.t1 = t[i];
    w.t2 = t[i];
    w.empty = false;
  }
  return w;
}

Window common_window(const Window& a, const Window& b) {
  if (a.empty) return b;
  if (b.empty) return a;
  return {std::min(a.t1, b.t1), std::max(a.t2, b.t2), false};
}

double density_integral(std::span<const double> t, std::span<const double> mu, double mu_opt, const Window& w) {
  if (w.empty) return 0.0;
  double area = 0.0;
  for (std::size_t i = 1; i < t.size() && i < mu.size(); ++i) {
    if (t[i - 1] < w.t1 || t[i] > w.t2) continue;
    const double a = std::max(mu[i - 1], mu_opt), b = std::max(mu[i], mu_opt);
    area += 0.5 * (a + b) * (t[i] - t[i - 1]);
  }
  return area / 3600.0;
}

double density_integral_above_opt(std::span<const double> t, std::span<const double> mu, double mu_opt) {
  return density_integral(t, mu, mu_opt, above_window(t, mu, mu_opt));
}

std::vector<std::size_t> spawn_poisson(double rate_per_min, std::size_t pairs, RngEngine& arrivals, RngEngine& choice,
                                       double tick_s) {
  std::vector<std::size_t> out;
  if (rate_per_min <= 0.0 || pairs == 0) return out;
  const int n = std::poisson_distribution<int>(rate_per_min * tick_s / 60.0)(arrivals);
  std::uniform_int_distribution<std::size_t> pick(0, pairs - 1);
  for (int i = 0; i < n; ++i) out.push_back(pick(choice));
  return out;
}

}  // namespace intersim::engine
