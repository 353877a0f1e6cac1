// src/model.cc

#include "hohmm/model.h"

#include <cmath>
#include <numbers>
#include <string>

#include "hohmm/errors.h"
#include "hohmm/logmath.h"

namespace hohmm {

namespace {

constexpr double kSumTol = 1e-9;

void check_stochastic_rows(const std::vector<double>& table, int rows, int cols,
                           const std::string& name) {
  if (static_cast<int>(table.size()) != rows * cols)
    throw DataError(name + ": expected " + std::to_string(rows * cols) +
                    " entries, got " + std::to_string(table.size()));
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      double v = table[static_cast<size_t>(r) * cols + c];
      if (!(v >= 0.0) || !std::isfinite(v))
        throw DataError(name + ": negative or non-finite entry in row " + std::to_string(r));
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTol)
      throw DataError(name + ": row " + std::to_string(r) + " sums to " + std::to_string(sum));
  }
}

}  // namespace

double GaussianMixture::component_log_density(int m, std::span<const double> x) const {
  const auto& mean = means[m];
  const auto& var = variances[m];
  double acc = 0.0;
  for (size_t d = 0; d < mean.size(); ++d) {
    const double diff = x[d] - mean[d];
    acc += diff * diff / var[d] + std::log(2.0 * std::numbers::pi * var[d]);
  }
  return -0.5 * acc;
}

double GaussianMixture::log_density(std::span<const double> x) const {
  double best = kLogZero;
  const int m_count = num_components();
  std::vector<double> terms(m_count);
  for (int m = 0; m < m_count; ++m) {
    terms[m] = (weights[m] > 0.0 ? std::log(weights[m]) + component_log_density(m, x)
                                 : kLogZero);
    best = std::max(best, terms[m]);
  }
  if (best == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return best + std::log(sum);
}

void GaussianMixture::validate() const {
  const int m_count = num_components();
  if (m_count < 1) throw DataError("GaussianMixture: no components");
  if (static_cast<int>(means.size()) != m_count ||
      static_cast<int>(variances.size()) != m_count)
    throw DataError("GaussianMixture: weights/means/variances size mismatch");
  const int d = dim();
  double wsum = 0.0;
  for (int m = 0; m < m_count; ++m) {
    if (!(weights[m] >= 0.0)) throw DataError("GaussianMixture: negative weight");
    wsum += weights[m];
    if (static_cast<int>(means[m].size()) != d ||
        static_cast<int>(variances[m].size()) != d)
      throw DataError("GaussianMixture: inconsistent component dimension");
    for (int k = 0; k < d; ++k) {
      if (!std::isfinite(means[m][k]))
        throw DataError("GaussianMixture: non-finite mean");
      if (!(variances[m][k] > 0.0) || !std::isfinite(variances[m][k]))
        throw DataError("GaussianMixture: variance must be positive");
    }
  }
  if (std::abs(wsum - 1.0) > kSumTol)
    throw DataError("GaussianMixture: weights sum to " + std::to_string(wsum));
}

void FeatureSequence::validate() const {
  if (dim < 1) throw DataError("FeatureSequence: dimension must be >= 1");
  if (data.empty() || data.size() % dim != 0)
    throw DataError("FeatureSequence: data size not a multiple of dim");
  for (double v : data)
    if (!std::isfinite(v)) throw DataError("FeatureSequence: non-finite entry");
}

const std::vector<double>& HmmModel::transition_level(int level) const {
  switch (level) {
    case 1: return trans1;
    case 2: return trans2;
    case 3: return trans3;
    default: throw DataError("HmmModel: bad transition level " + std::to_string(level));
  }
}

std::vector<double>& HmmModel::transition_level(int level) {
  return const_cast<std::vector<double>&>(
      static_cast<const HmmModel*>(this)->transition_level(level));
}

int HmmModel::num_contexts(int length) const {
  int n = 1;
  for (int i = 0; i < length; ++i) n *= num_states;
  return n;
}

void HmmModel::validate() const {
  if (order < 1 || order > 3) throw DataError("HmmModel: order must be 1, 2, or 3");
  if (num_states < 1) throw DataError("HmmModel: num_states must be >= 1");
  const int n = num_states;

  check_stochastic_rows(initial, 1, n, "initial");
  check_stochastic_rows(trans1, n, n, "trans1");
  if (order >= 2) {
    check_stochastic_rows(trans2, n * n, n, "trans2");
  } else if (!trans2.empty()) {
    throw DataError("HmmModel: trans2 present on an order-1 model");
  }
  if (order == 3) {
    check_stochastic_rows(trans3, n * n * n, n, "trans3");
  } else if (!trans3.empty()) {
    throw DataError("HmmModel: trans3 present on an order-" + std::to_string(order) +
                    " model");
  }

  if (static_cast<int>(emissions.size()) != n)
    throw DataError("HmmModel: expected one emission density per state");
  const int d = emissions[0].dim();
  const int m = emissions[0].num_components();
  for (const auto& gmm : emissions) {
    gmm.validate();
    if (gmm.dim() != d || gmm.num_components() != m)
      throw DataError("HmmModel: emission dimensions differ across states");
  }
}

}  // namespace hohmm
