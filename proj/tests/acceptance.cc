// tests/acceptance.cc
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the binary exits nonzero if any criterion fails. Reads checked-in data
// (golden WAV, stored features, benchmark synth spec) from $HOHMM_DATA.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hohmm/features.h"
#include "hohmm/inference.h"
#include "hohmm/io.h"
#include "hohmm/logmath.h"
#include "hohmm/speaker_id.h"
#include "hohmm/stats.h"
#include "hohmm/synth.h"
#include "hohmm/train.h"
#include "test_util.h"

using namespace hohmm;

namespace {

std::string data_dir() {
  const char* env = std::getenv("HOHMM_DATA");
  return env != nullptr ? env : "data";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool rel_close(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

struct OracleInstance {
  HmmModel model;
  FeatureSequence obs;
};

// >= 50 seeded instances: orders 1..3, N <= 3, T <= 6, tight emissions.
std::vector<OracleInstance> oracle_instances() {
  std::mt19937_64 rng(0xace5);
  std::vector<OracleInstance> instances;
  for (int order = 1; order <= 3; ++order)
    for (int n = 2; n <= 3; ++n)
      for (int t_count : {1, 2, 4, 6})
        for (int rep = 0; rep < 3; ++rep) {
          OracleInstance inst;
          inst.model = testutil::random_model(order, n, 2, rng, 0.02);
          inst.obs = sample_sequence(inst.model, t_count, rng);
          instances.push_back(std::move(inst));
        }
  return instances;
}

// --- criteria -------------------------------------------------------------------

bool criterion_exhaustive_oracle(std::string* detail) {
  const auto start = std::chrono::steady_clock::now();
  const auto instances = oracle_instances();
  double max_fwd_err = 0.0;
  double max_vit_err = 0.0;
  int path_mismatches = 0;
  for (const auto& inst : instances) {
    const auto oracle = testutil::brute_force(inst.model, inst.obs);
    const double fwd = forward(inst.model, inst.obs).log_likelihood;
    max_fwd_err = std::max(max_fwd_err,
                           std::abs(fwd - oracle.total_log_likelihood) /
                               std::max(1.0, std::abs(oracle.total_log_likelihood)));
    const ViterbiResult vit = viterbi(inst.model, inst.obs);
    max_vit_err = std::max(max_vit_err, std::abs(vit.log_prob - oracle.best_log_prob));
    if (vit.path != oracle.best_path) ++path_mismatches;
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%zu models, max fwd rel err %.2e, max viterbi err %.2e, "
                "%d path mismatches, %.1fs",
                instances.size(), max_fwd_err, max_vit_err, path_mismatches, elapsed);
  *detail = buf;
  return instances.size() >= 50 && max_fwd_err <= 1e-9 && max_vit_err <= 1e-9 &&
         path_mismatches == 0 && elapsed < 30.0;
}

bool criterion_order_collapse(std::string* detail) {
  std::mt19937_64 rng(0xc011);
  double max_ll_err = 0.0;
  int path_mismatches = 0;
  for (int i = 0; i < 20; ++i) {
    const int n = 2 + i % 2;
    HmmModel first = testutil::random_model(1, n, 2, rng, 0.05);
    HmmModel collapsed = testutil::collapse_from_first_order(first, 3);
    const FeatureSequence obs = sample_sequence(first, 4 + i % 5, rng);
    max_ll_err = std::max(max_ll_err,
                          std::abs(forward(collapsed, obs).log_likelihood -
                                   forward(first, obs).log_likelihood));
    if (viterbi(collapsed, obs).path != viterbi(first, obs).path) ++path_mismatches;
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "20 models, max likelihood err %.2e, %d path mismatches",
                max_ll_err, path_mismatches);
  *detail = buf;
  return max_ll_err <= 1e-9 && path_mismatches == 0;
}

bool criterion_composite_equivalence(std::string* detail) {
  std::mt19937_64 rng(0xc035);
  double max_err = 0.0;
  int count = 0;
  for (int order : {2, 3})
    for (int n : {2, 3, 4})
      for (int t_count : {6, 13, 20}) {
        HmmModel model = testutil::random_model(order, n, 2, rng, 0.05);
        const CompositeExpansion expansion = expand_to_first_order(model);
        const FeatureSequence obs = sample_sequence(model, t_count, rng);
        max_err = std::max(max_err, std::abs(expansion.forward_log_likelihood(obs) -
                                             forward(model, obs).log_likelihood));
        ++count;
      }
  for (int t_count : {10, 16}) {  // two more to reach 20 instances
    HmmModel model = testutil::random_model(3, 4, 2, rng, 0.05);
    const CompositeExpansion expansion = expand_to_first_order(model);
    const FeatureSequence obs = sample_sequence(model, t_count, rng);
    max_err = std::max(max_err, std::abs(expansion.forward_log_likelihood(obs) -
                                         forward(model, obs).log_likelihood));
    ++count;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d instances, max likelihood err %.2e", count, max_err);
  *detail = buf;
  return count == 20 && max_err <= 1e-9;
}

HmmModel em_truth_model() {
  HmmModel m;
  m.order = 3;
  m.num_states = 2;
  m.initial = {0.5, 0.5};
  m.trans1.assign(4, 0.5);
  m.trans2.assign(8, 0.5);
  const double p_next1[8] = {0.1, 0.8, 0.3, 0.6, 0.9, 0.2, 0.7, 0.4};
  m.trans3.resize(16);
  for (int c = 0; c < 8; ++c) {
    m.trans3[static_cast<size_t>(c) * 2] = 1.0 - p_next1[c];
    m.trans3[static_cast<size_t>(c) * 2 + 1] = p_next1[c];
  }
  m.emissions.resize(2);
  for (int s = 0; s < 2; ++s) {
    m.emissions[s].weights = {1.0};
    m.emissions[s].means.assign(1, std::vector<double>(2, s == 0 ? 1.0 : 4.0));
    m.emissions[s].variances.assign(1, std::vector<double>(2, 0.04));
  }
  return m;
}

bool criterion_em_behavior(std::string* detail) {
  const HmmModel truth = em_truth_model();
  std::mt19937_64 rng(0xe31);
  std::vector<FeatureSequence> data;
  for (int i = 0; i < 200; ++i) data.push_back(sample_sequence(truth, 20, rng));

  TrainConfig config;
  config.order = 3;
  config.num_states = 2;
  config.num_mixtures = 1;
  config.max_iterations = 10;
  config.log_likelihood_tol = -1.0;  // run the full ten iterations
  config.seed = 17;
  const auto [model, report] = baum_welch(init_model(config, data), data, config);

  double worst_drop = 0.0;
  for (size_t i = 1; i < report.log_likelihoods.size(); ++i)
    worst_drop = std::min(worst_drop,
                          report.log_likelihoods[i] - report.log_likelihoods[i - 1]);
  double linf = 0.0;
  for (size_t i = 0; i < truth.trans3.size(); ++i)
    linf = std::max(linf, std::abs(model.trans3[i] - truth.trans3[i]));

  char buf[120];
  std::snprintf(buf, sizeof buf, "10 iterations, worst delta %.2e, trans3 Linf %.4f",
                worst_drop, linf);
  *detail = buf;
  return report.log_likelihoods.size() == 10 && worst_drop >= -1e-7 && linf < 0.05;
}

bool criterion_alpha_beta(std::string* detail) {
  double max_err = 0.0;
  int checked = 0;
  for (const auto& inst : oracle_instances()) {
    if (inst.obs.num_frames() < inst.model.order) continue;
    const ForwardResult f = forward(inst.model, inst.obs);
    const Trellis b = backward(inst.model, inst.obs);
    for (int t = inst.model.order - 1; t < inst.obs.num_frames(); ++t) {
      std::vector<double> terms(f.trellis.log_values[t].size());
      for (size_t c = 0; c < terms.size(); ++c)
        terms[c] = f.trellis.log_values[t][c] + b.log_values[t][c];
      const double combined = log_sum_exp(terms);
      max_err = std::max(max_err, std::abs(combined - f.log_likelihood) /
                                      std::max(1.0, std::abs(f.log_likelihood)));
      ++checked;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d (t, instance) checks, max rel err %.2e", checked,
                max_err);
  *detail = buf;
  return max_err <= 1e-9 && checked > 0;
}

bool criterion_synthetic_ordering(std::string* detail) {
  const auto start = std::chrono::steady_clock::now();
  const SynthSpec spec = load_synth_spec(data_dir() + "/benchmark_synth.txt");
  const SynthDataset dataset = generate_dataset(spec);

  std::map<std::string, std::vector<FeatureSequence>> by_speaker;
  for (const auto& utt : dataset.train) by_speaker[utt.speaker_id].push_back(utt.features);

  double shouted_acc[4] = {};
  double neutral_acc[4] = {};
  for (int order = 1; order <= 3; ++order) {
    TrainConfig config;
    config.order = order;
    config.num_states = spec.num_states;
    config.num_mixtures = 1;
    config.max_iterations = 12;
    config.seed = 7;
    SpeakerRegistry registry;
    for (const auto& [speaker, data] : by_speaker)
      registry.models[speaker] = train_speaker(config, data);
    const EvalReport report = evaluate(registry, dataset.test);
    shouted_acc[order] = report.per_environment.at("shouted").accuracy();
    neutral_acc[order] = report.per_environment.at("neutral").accuracy();
  }
  const double elapsed = seconds_since(start);

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "distorted acc order1/2/3 = %.1f%%/%.1f%%/%.1f%% "
                "(neutral %.1f%%/%.1f%%/%.1f%%), %.1fs",
                100 * shouted_acc[1], 100 * shouted_acc[2], 100 * shouted_acc[3],
                100 * neutral_acc[1], 100 * neutral_acc[2], 100 * neutral_acc[3], elapsed);
  *detail = buf;
  return shouted_acc[3] >= shouted_acc[2] && shouted_acc[2] >= shouted_acc[1] &&
         shouted_acc[3] - shouted_acc[1] >= 0.10 && elapsed < 300.0;
}

bool criterion_t_test(std::string* detail) {
  const SampleStats s1 = SampleStats::from_values(std::vector<double>{63.0, 65.0});
  const SampleStats s2 = SampleStats::from_values(std::vector<double>{57.0, 58.0});
  const TTestResult hand = t_test(s1, s2);
  const bool hand_ok = std::abs(hand.t_value - 5.8138) <= 1e-4;

  const double reference_t[4] = {1.018, 1.781, 1.345, 1.822};
  const bool expected[4] = {false, true, false, true};
  bool decisions_ok = true;
  for (int i = 0; i < 4; ++i)
    if (significance_decision(reference_t[i], 1.645).significant != expected[i])
      decisions_ok = false;

  char buf[96];
  std::snprintf(buf, sizeof buf, "hand t = %.5f, decision flags %s", hand.t_value,
                decisions_ok ? "match" : "mismatch");
  *detail = buf;
  return hand_ok && decisions_ok;
}

bool criterion_scaling(std::string* detail) {
  std::mt19937_64 rng(0x5ca1e);
  auto timed_forward = [&](int n) {
    HmmModel model = testutil::random_model(3, n, 4, rng, 0.5);
    const FeatureSequence obs = sample_sequence(model, 200, rng);
    std::vector<double> times;
    double sink = 0.0;
    for (int run = 0; run < 5; ++run) {
      const auto start = std::chrono::steady_clock::now();
      sink += forward(model, obs).log_likelihood;
      times.push_back(seconds_since(start));
    }
    std::sort(times.begin(), times.end());
    return std::pair<double, double>(times[2], sink);
  };
  const auto [t6, sink6] = timed_forward(6);
  const auto [t12, sink12] = timed_forward(12);
  const double ratio = t12 / t6;
  char buf[120];
  std::snprintf(buf, sizeof buf, "median forward: N=6 %.4fs, N=12 %.4fs, ratio %.1f",
                t6, t12, ratio);
  *detail = buf;
  return std::isfinite(sink6 + sink12) && ratio >= 8.0 && ratio <= 32.0;
}

bool criterion_front_end(std::string* detail) {
  const AudioBuffer audio = load_wav(data_dir() + "/golden.wav");
  const FeatureConfig config;
  const FeatureSequence got = extract_features(audio, config);
  const LoadedFeatures stored = load_features(data_dir() + "/golden_features.txt");

  double linf = 1e300;
  bool shape_ok = got.dim == stored.features.dim &&
                  got.num_frames() == stored.features.num_frames() &&
                  stored.config_fingerprint == fingerprint(config);
  if (shape_ok) {
    linf = 0.0;
    for (size_t i = 0; i < got.data.size(); ++i)
      linf = std::max(linf, std::abs(got.data[i] - stored.features.data[i]));
  }

  std::mt19937_64 rng(0xf3a7);
  bool frames_ok = true;
  for (int i = 0; i < 20; ++i) {
    const int len = 400 + static_cast<int>(rng() % 30000);
    AudioBuffer a;
    a.sample_rate_hz = 16000;
    a.samples.assign(len, 4321);
    if (extract_mfcc(a, config).num_frames() != 1 + (len - 400) / 160) frames_ok = false;
  }

  FeatureSequence constant;
  constant.dim = 4;
  constant.data.assign(6 * 4, 1.25);
  const FeatureSequence with_deltas = append_deltas(constant, config.delta_window);
  bool deltas_zero = true;
  for (int t = 0; t < 6; ++t)
    for (int d = 4; d < 8; ++d)
      if (with_deltas.at(t, d) != 0.0) deltas_zero = false;

  char buf[140];
  std::snprintf(buf, sizeof buf,
                "golden Linf %.2e, frame formula %s, constant deltas %s", linf,
                frames_ok ? "exact" : "WRONG", deltas_zero ? "zero" : "NONZERO");
  *detail = buf;
  return shape_ok && linf <= 1e-6 && frames_ok && deltas_zero;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*run)(std::string*);
  };
  const Criterion criteria[] = {
      {"exhaustive-oracle equivalence", criterion_exhaustive_oracle},
      {"order-collapse equivalence", criterion_order_collapse},
      {"composite-state equivalence", criterion_composite_equivalence},
      {"EM monotonicity and recovery", criterion_em_behavior},
      {"alpha-beta consistency", criterion_alpha_beta},
      {"synthetic ordering benchmark", criterion_synthetic_ordering},
      {"t-test value and decisions", criterion_t_test},
      {"forward scaling N^4", criterion_scaling},
      {"front-end regression", criterion_front_end},
  };

  int failed = 0;
  int index = 1;
  for (const auto& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(&detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  %d  %s (%s)\n", ok ? "PASS" : "FAIL", index, criterion.name,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
    ++index;
  }
  std::printf("acceptance: %d/9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
