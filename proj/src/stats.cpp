#include "spdebias/stats.hpp"

#include <cmath>
#include <limits>

namespace spdebias {

double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double c = 0.0;
  for (double x : values) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

Moments moments(const std::vector<double>& values) {
  Moments m;
  m.n = values.size();
  if (m.n == 0) {
    m.mean = std::numeric_limits<double>::quiet_NaN();
    m.variance = m.std_error = m.mean;
    return m;
  }
  m.mean = compensated_sum(values) / static_cast<double>(m.n);
  if (m.n < 2) {
    m.variance = m.std_error = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  std::vector<double> sq(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double dev = values[k] - m.mean;
    sq[k] = dev * dev;
  }
  m.variance = compensated_sum(sq) / static_cast<double>(m.n - 1);
  m.std_error = std::sqrt(m.variance / static_cast<double>(m.n));
  return m;
}

}  // namespace spdebias
