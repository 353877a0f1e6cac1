// src/stats.cc

#include "hohmm/stats.h"

#include <cmath>
#include <limits>

#include "hohmm/errors.h"

namespace hohmm {

namespace {

TTestResult from_statistic(double numerator, double spread, double critical) {
  TTestResult result;
  result.critical_value = critical;
  if (spread == 0.0) {
    result.t_value = numerator == 0.0 ? 0.0
                     : numerator > 0.0 ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
  } else {
    result.t_value = numerator / spread;
  }
  result.significant = result.t_value > critical;
  return result;
}

}  // namespace

SampleStats SampleStats::from_values(std::span<const double> values) {
  if (values.size() < 2) throw DataError("SampleStats: need at least two values");
  SampleStats s;
  s.n = static_cast<int>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= s.n;
  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(acc / (s.n - 1));
  return s;
}

TTestResult t_test(const SampleStats& sample1, const SampleStats& sample2,
                   double critical) {
  if (sample1.n != sample2.n)
    throw DataError("t_test: samples must have equal size");
  if (sample1.n < 2) throw DataError("t_test: need at least two values per sample");
  const double pooled =
      std::sqrt((sample1.sd * sample1.sd + sample2.sd * sample2.sd) / sample1.n);
  return from_statistic(sample1.mean - sample2.mean, pooled, critical);
}

TTestResult welch_t_test(const SampleStats& sample1, const SampleStats& sample2,
                         double critical) {
  if (sample1.n < 2 || sample2.n < 2)
    throw DataError("welch_t_test: need at least two values per sample");
  const double spread = std::sqrt(sample1.sd * sample1.sd / sample1.n +
                                  sample2.sd * sample2.sd / sample2.n);
  return from_statistic(sample1.mean - sample2.mean, spread, critical);
}

TTestResult significance_decision(double t_value, double critical) {
  TTestResult result;
  result.t_value = t_value;
  result.critical_value = critical;
  result.significant = t_value > critical;
  return result;
}

}  // namespace hohmm
