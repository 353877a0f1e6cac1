// hohmm/speaker_id.h
//
// Enrollment registry, maximum-likelihood identification, and batch
// evaluation with per-environment accuracies.

#ifndef HOHMM_SPEAKER_ID_H_
#define HOHMM_SPEAKER_ID_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hohmm/model.h"

namespace hohmm {

struct SpeakerRegistry {
  std::map<std::string, HmmModel> models;
  std::uint64_t feature_fingerprint = 0;
  std::uint64_t train_fingerprint = 0;

  // All models must share order, state count, mixture count, and dimension;
  // ids must be non-empty.
  void validate() const;
};

struct LabeledUtterance {
  std::string speaker_id;
  std::string environment;  // "neutral", "shouted", ...
  std::string path;         // source file, kept for reports
  FeatureSequence features;
};

enum class ScoreMethod { kViterbi, kForward };

struct IdentifyResult {
  std::string speaker_id;
  // One entry per registry model, in registry (lexicographic id) order.
  std::vector<std::pair<std::string, double>> scores;
};

// argmax over per-speaker log-likelihood of obs; ties go to the
// lexicographically smaller id.
IdentifyResult identify(const SpeakerRegistry& registry, const FeatureSequence& obs,
                        ScoreMethod method = ScoreMethod::kViterbi);

struct ScoreRow {
  std::string speaker_id;
  double viterbi_log_prob;
  double forward_log_likelihood;
};

// Both scores for every speaker, sorted descending by Viterbi score.
std::vector<ScoreRow> score_all(const SpeakerRegistry& registry,
                                const FeatureSequence& obs);

struct EnvironmentStats {
  int correct = 0;
  int total = 0;
  // truth -> decided -> count
  std::map<std::string, std::map<std::string, int>> confusion;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct UtteranceDecision {
  std::string path;
  std::string true_speaker;
  std::string environment;
  std::string decided_speaker;
  double best_score = 0.0;
  double margin = 0.0;  // best minus runner-up, 0 for a single-model registry
  bool correct = false;
};

struct EvalReport {
  std::map<std::string, EnvironmentStats> per_environment;
  std::vector<UtteranceDecision> decisions;

  EnvironmentStats overall() const;
};

EvalReport evaluate(const SpeakerRegistry& registry,
                    const std::vector<LabeledUtterance>& test,
                    ScoreMethod method = ScoreMethod::kViterbi);

}  // namespace hohmm

#endif  // HOHMM_SPEAKER_ID_H_
