#pragma once

#include <cstddef>
#include <span>

namespace intersim::cli {

/// Two-sided Student-t confidence interval for a mean. With fewer than two samples the half
/// width is NaN; with none the mean is NaN too.
struct Interval {
  std::size_t n = 0;
  double mean = 0.0;
  double half_width = 0.0;

  double lower() const { return mean - half_width; }
  double upper() const { return mean + half_width; }
};

Interval t_interval(std::span<const double> samples, double confidence = 0.95);

}  // namespace intersim::cli
