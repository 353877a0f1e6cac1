// src/speaker_id.cc

#include "hohmm/speaker_id.h"

#include <algorithm>

#include "hohmm/errors.h"
#include "hohmm/inference.h"

namespace hohmm {

void SpeakerRegistry::validate() const {
  if (models.empty()) throw DataError("SpeakerRegistry: no enrolled speakers");
  const HmmModel& ref = models.begin()->second;
  for (const auto& [id, model] : models) {
    if (id.empty()) throw DataError("SpeakerRegistry: empty speaker id");
    if (model.order != ref.order || model.num_states != ref.num_states ||
        model.num_mixtures() != ref.num_mixtures() ||
        model.feature_dim() != ref.feature_dim())
      throw DataError("SpeakerRegistry: model for '" + id +
                      "' differs in order/states/mixtures/dimension");
  }
}

IdentifyResult identify(const SpeakerRegistry& registry, const FeatureSequence& obs,
                        ScoreMethod method) {
  registry.validate();
  IdentifyResult result;
  result.scores.reserve(registry.models.size());
  double best = 0.0;
  // Map order is lexicographic, so keeping strictly-better implements the
  // smallest-id tie rule.
  for (const auto& [id, model] : registry.models) {
    const double score = method == ScoreMethod::kViterbi
                             ? viterbi(model, obs).log_prob
                             : forward(model, obs).log_likelihood;
    result.scores.emplace_back(id, score);
    if (result.speaker_id.empty() || score > best) {
      best = score;
      result.speaker_id = id;
    }
  }
  return result;
}

std::vector<ScoreRow> score_all(const SpeakerRegistry& registry,
                                const FeatureSequence& obs) {
  registry.validate();
  std::vector<ScoreRow> rows;
  rows.reserve(registry.models.size());
  for (const auto& [id, model] : registry.models)
    rows.push_back({id, viterbi(model, obs).log_prob, forward(model, obs).log_likelihood});
  std::stable_sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
    return a.viterbi_log_prob > b.viterbi_log_prob;
  });
  return rows;
}

EnvironmentStats EvalReport::overall() const {
  EnvironmentStats all;
  for (const auto& [env, stats] : per_environment) {
    all.correct += stats.correct;
    all.total += stats.total;
    for (const auto& [truth, row] : stats.confusion)
      for (const auto& [decided, count] : row) all.confusion[truth][decided] += count;
  }
  return all;
}

EvalReport evaluate(const SpeakerRegistry& registry,
                    const std::vector<LabeledUtterance>& test, ScoreMethod method) {
  registry.validate();
  if (test.empty()) throw DataError("evaluate: empty test set");

  EvalReport report;
  for (const auto& utt : test) {
    if (!registry.models.contains(utt.speaker_id))
      throw DataError("evaluate: speaker '" + utt.speaker_id + "' is not enrolled");
    const IdentifyResult id = identify(registry, utt.features, method);

    double best = id.scores.front().second, runner_up = best;
    bool first = true;
    for (const auto& [spk, score] : id.scores) {
      if (spk == id.speaker_id) {
        best = score;
        continue;
      }
      if (first || score > runner_up) {
        runner_up = score;
        first = false;
      }
    }

    UtteranceDecision decision;
    decision.path = utt.path;
    decision.true_speaker = utt.speaker_id;
    decision.environment = utt.environment;
    decision.decided_speaker = id.speaker_id;
    decision.best_score = best;
    decision.margin = id.scores.size() > 1 ? best - runner_up : 0.0;
    decision.correct = id.speaker_id == utt.speaker_id;

    EnvironmentStats& stats = report.per_environment[utt.environment];
    ++stats.total;
    if (decision.correct) ++stats.correct;
    ++stats.confusion[utt.speaker_id][id.speaker_id];
    report.decisions.push_back(std::move(decision));
  }
  return report;
}

}  // namespace hohmm
