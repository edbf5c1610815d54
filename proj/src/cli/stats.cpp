#include "intersim/cli/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace intersim::cli {

Interval t_interval(std::span<const double> samples, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0, 1)");
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  Interval out;
  out.n = samples.size();
  if (out.n == 0) return {0, kNaN, kNaN};
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(out.n);
  if (out.n < 2) {
    out.half_width = kNaN;
    return out;
  }
  double ss = 0.0;
  for (double x : samples) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(out.n - 1));
  boost::math::students_t dist(static_cast<double>(out.n - 1));
  const double q = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  out.half_width = q * sd / std::sqrt(static_cast<double>(out.n));
  return out;
}

}  // namespace intersim::cli
