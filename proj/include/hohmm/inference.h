// hohmm/inference.h
//
// Exact inference for order-1/2/3 HMMs, all in log domain: state-sequence
// probability, joint state-output probability, forward, backward, and
// Viterbi decoding over the order-r trellis.

#ifndef HOHMM_INFERENCE_H_
#define HOHMM_INFERENCE_H_

#include <span>
#include <vector>

#include "hohmm/model.h"

namespace hohmm {

// log P(path) under the model's chain, including every ramp factor:
// initial, then the order-t table at step t until the full order applies.
double sequence_log_prob(const HmmModel& model, std::span<const int> path);

// log P(path, obs) = sequence_log_prob + sum_t log b_{path[t]}(obs_t).
double joint_log_prob(const HmmModel& model, std::span<const int> path,
                      const FeatureSequence& obs);

// T x N matrix (row-major) of per-frame per-state emission log densities.
std::vector<double> emission_log_densities(const HmmModel& model,
                                           const FeatureSequence& obs);

struct ForwardResult {
  Trellis trellis;
  double log_likelihood;  // log P(obs)
};

ForwardResult forward(const HmmModel& model, const FeatureSequence& obs);

// Backward lattice. Requires obs.num_frames() >= order. Entries are filled
// for every t (partial tuples during the ramp); the defining contract is
// log sum_c alpha_t(c) beta_t(c) == forward log-likelihood for t in
// [order-1, T-1].
Trellis backward(const HmmModel& model, const FeatureSequence& obs);

struct ViterbiResult {
  std::vector<int> path;
  double log_prob;  // max over paths of joint_log_prob
};

// Most likely state sequence. Ties are broken deterministically toward the
// lowest state index, later frames taking precedence (the optimal path whose
// reversed state sequence is lexicographically smallest).
ViterbiResult viterbi(const HmmModel& model, const FeatureSequence& obs);

// Embedding of an order-r chain over N states into an order-1 chain over
// N^r tuple states: tuple (i,j,k) steps to (j,k,w) with probability
// a_ijkw and emits with state k's density. Because the tuple chain only
// becomes well-defined once r states exist, likelihood evaluation seeds it
// with the mass accumulated over the first r-1 frames.
struct CompositeExpansion {
  HmmModel first_order;  // order-1 model over N^r tuple states
  HmmModel source;       // the expanded model, kept for seeding

  // Log mass over tuple states after consuming obs frames 0..r-2 and the
  // transition into frame r-1 (emission of frame r-1 not yet applied).
  std::vector<double> start_log_mass(const FeatureSequence& obs) const;

  // Forward log-likelihood of obs computed entirely on the tuple chain,
  // seeded with start_log_mass. Equals forward(source, obs).log_likelihood.
  double forward_log_likelihood(const FeatureSequence& obs) const;
};

CompositeExpansion expand_to_first_order(const HmmModel& model);

}  // namespace hohmm

#endif  // HOHMM_INFERENCE_H_
