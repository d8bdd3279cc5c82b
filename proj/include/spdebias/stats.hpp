#pragma once

#include <cstddef>
#include <vector>

namespace spdebias {

/// Sample moments. variance and std_error are NaN when n < 2.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
};

/// Two-pass moments with compensated summation; the result depends only on
/// the values and their order.
Moments moments(const std::vector<double>& values);

/// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& values);

}  // namespace spdebias
