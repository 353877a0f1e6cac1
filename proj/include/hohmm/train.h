// hohmm/train.h
//
// Maximum-likelihood training of order-r HMMs: k-means initialization,
// Baum-Welch re-estimation on the order-r lattice (the tuple-state chain of
// expand_to_first_order, computed without materializing it), and
// convergence control.

#ifndef HOHMM_TRAIN_H_
#define HOHMM_TRAIN_H_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hohmm/model.h"

namespace hohmm {

enum class Topology { kErgodic, kLeftToRight };

struct TrainConfig {
  int order = 3;
  int num_states = 6;
  int num_mixtures = 5;
  int max_iterations = 20;
  double log_likelihood_tol = 1e-4;  // relative per-frame improvement
  double transition_floor = 1e-6;
  double variance_floor = 1e-4;
  std::uint64_t seed = 0;
  Topology topology = Topology::kErgodic;

  void validate() const;
};

struct TrainReport {
  int iterations_run = 0;
  std::vector<double> log_likelihoods;  // total data log-likelihood per iteration
  bool converged = false;
  double max_decrease = 0.0;  // largest observed drop (floors can cause small ones)
  std::vector<std::string> notes;
};

// Expected counts from one E-step over one or more sequences. Mergeable.
struct SuffStats {
  int order = 0;
  int num_states = 0;
  int num_mixtures = 0;
  int dim = 0;
  std::vector<double> initial_counts;                 // N
  std::array<std::vector<double>, 3> trans_counts;    // level L: N^L x N
  std::vector<double> state_occ;                      // N
  std::vector<double> comp_occ;                       // N x M
  std::vector<double> comp_sum;                       // N x M x D
  std::vector<double> comp_sumsq;                     // N x M x D
  double log_likelihood = 0.0;
  std::int64_t frames = 0;

  static SuffStats zeros(const HmmModel& model);
  void merge(const SuffStats& other);
};

// Posterior expected counts of obs under model. Sequences shorter than the
// order are handled by exhaustive path enumeration instead of the lattice.
SuffStats accumulate_stats(const HmmModel& model, const FeatureSequence& obs);

// Uniform transitions over the topology's allowed successors; emissions from
// a global k-means over all frames (N*M clusters grouped by centroid norm).
// Deterministic given config.seed.
HmmModel init_model(const TrainConfig& config,
                    const std::vector<FeatureSequence>& data);

std::pair<HmmModel, TrainReport> baum_welch(const HmmModel& init,
                                            const std::vector<FeatureSequence>& data,
                                            const TrainConfig& config);

// init_model followed by baum_welch.
HmmModel train_speaker(const TrainConfig& config,
                       const std::vector<FeatureSequence>& data,
                       TrainReport* report = nullptr);

}  // namespace hohmm

#endif  // HOHMM_TRAIN_H_
