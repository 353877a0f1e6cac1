// hohmm/model.h
//
// Core data model: Gaussian-mixture emissions, observation sequences, and
// hidden Markov models whose state process may be a first-, second-, or
// third-order Markov chain.

#ifndef HOHMM_MODEL_H_
#define HOHMM_MODEL_H_

#include <span>
#include <vector>

namespace hohmm {

// Diagonal-covariance Gaussian mixture over D-dimensional vectors.
struct GaussianMixture {
  std::vector<double> weights;                 // M, sums to 1
  std::vector<std::vector<double>> means;      // M x D
  std::vector<std::vector<double>> variances;  // M x D, strictly positive

  int num_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  double log_density(std::span<const double> x) const;
  double component_log_density(int m, std::span<const double> x) const;

  void validate() const;
};

// One utterance as a T x D matrix of observation vectors, row-major.
struct FeatureSequence {
  int dim = 0;
  std::vector<double> data;

  int num_frames() const { return dim == 0 ? 0 : static_cast<int>(data.size()) / dim; }
  std::span<const double> frame(int t) const {
    return std::span<const double>(data.data() + static_cast<size_t>(t) * dim, dim);
  }
  double& at(int t, int d) { return data[static_cast<size_t>(t) * dim + d]; }
  double at(int t, int d) const { return data[static_cast<size_t>(t) * dim + d]; }

  void validate() const;
};

// Hidden Markov model of order r in {1,2,3} over N states.
//
// The state process conditions each transition on the r previous states.
// Before r states exist, the lower-order "ramp" distributions apply:
// `initial` at the first step, trans1 at the second, trans2 at the third
// (order permitting), and the full-order table from then on.
//
// Transition tables are stored flattened and row-stochastic. A row of the
// level-L table is indexed by the code of the L conditioning states, oldest
// first in base N; the column is the next state. State indices are 0-based.
struct HmmModel {
  int order = 1;
  int num_states = 0;
  std::vector<double> initial;              // N
  std::vector<double> trans1;               // N   x N
  std::vector<double> trans2;               // N^2 x N, present iff order >= 2
  std::vector<double> trans3;               // N^3 x N, present iff order == 3
  std::vector<GaussianMixture> emissions;   // N

  int feature_dim() const { return emissions.empty() ? 0 : emissions[0].dim(); }
  int num_mixtures() const { return emissions.empty() ? 0 : emissions[0].num_components(); }

  // Transition table with `level` conditioning states (1..order).
  const std::vector<double>& transition_level(int level) const;
  std::vector<double>& transition_level(int level);

  // N^length, the number of state tuples of the given length.
  int num_contexts(int length) const;

  void validate() const;
};

// Time x state-tuple lattice of log values (forward, backward, or Viterbi).
//
// log_values[t] covers the state tuples ending at frame t; tuple length is
// min(t+1, order) during the ramp, `order` afterwards, encoded oldest state
// first in base num_states. Backpointers (Viterbi only) store the dropped
// oldest state and exist for t >= order.
struct Trellis {
  int order = 1;
  int num_states = 0;
  std::vector<std::vector<double>> log_values;
  std::vector<std::vector<int>> backpointers;
};

}  // namespace hohmm

#endif  // HOHMM_MODEL_H_
