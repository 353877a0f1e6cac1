// hohmm/logmath.h

#ifndef HOHMM_LOGMATH_H_
#define HOHMM_LOGMATH_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace hohmm {

// Zero probability in log domain. -inf + finite = -inf and max(-inf, x) = x,
// so trellis recursions need no special casing for impossible cells.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(std::span<const double> values) {
  double m = kLogZero;
  for (double v : values) m = std::max(m, v);
  if (m == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == kLogZero) return kLogZero;
  return a + std::log1p(std::exp(b - a));
}

// Elementwise log of a probability table; zeros map to kLogZero.
inline std::vector<double> log_table(const std::vector<double>& table) {
  std::vector<double> out(table.size());
  for (size_t i = 0; i < table.size(); ++i)
    out[i] = table[i] > 0.0 ? std::log(table[i]) : kLogZero;
  return out;
}

}  // namespace hohmm

#endif  // HOHMM_LOGMATH_H_
