// hohmm/stats.h
//
// Student's t significance testing between two equal-size samples of
// accuracies.

#ifndef HOHMM_STATS_H_
#define HOHMM_STATS_H_

#include <span>
#include <vector>

namespace hohmm {

struct SampleStats {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, n-1 denominator

  static SampleStats from_values(std::span<const double> values);
};

struct TTestResult {
  double t_value = 0.0;
  double critical_value = 0.0;
  bool significant = false;  // t_value > critical_value, one-tailed
};

// t = (mean1 - mean2) / sqrt((sd1^2 + sd2^2) / n).
//
// Note the denominator: this toolkit's pooled spread divides the summed
// sample variances by the common sample size n. That is NOT the textbook
// pooled-variance estimator; it is kept deliberately so results stay
// comparable with evaluations that use the same convention. Use
// welch_t_test for the standard statistic.
//
// Requires equal sizes and n >= 2. A zero pooled spread yields t = 0 when
// the means are equal and +-infinity otherwise.
TTestResult t_test(const SampleStats& sample1, const SampleStats& sample2,
                   double critical = 1.645);

// Textbook Welch statistic t = (mean1 - mean2) / sqrt(sd1^2/n1 + sd2^2/n2).
// Never silently substituted for t_test.
TTestResult welch_t_test(const SampleStats& sample1, const SampleStats& sample2,
                         double critical = 1.645);

// Decision rule alone, for externally computed t values.
TTestResult significance_decision(double t_value, double critical);

}  // namespace hohmm

#endif  // HOHMM_STATS_H_
