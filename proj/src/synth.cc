// src/synth.cc

#include "hohmm/synth.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hohmm/errors.h"

namespace hohmm {

namespace {

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double normal_double(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_double(rng);  // (0, 1]
  const double u2 = unit_double(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int sample_row(std::span<const double> row, std::mt19937_64& rng) {
  double u = unit_double(rng);
  for (size_t i = 0; i + 1 < row.size(); ++i) {
    u -= row[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(row.size()) - 1;
}

// Per-speaker next-state rule: w = (x*i + y*j + z*k + c) mod N over the
// conditioning states, oldest first. Speakers 0..3 have x = 0, so their
// dynamics are fully visible to a second-order model; later speakers come in
// pairs that share (y, z, c) and differ only in the third-order coefficient
// x, which a second-order model cannot distinguish (x coprime to N smears
// the next state uniformly once the oldest state is marginalized out).
struct PatternCoeffs {
  int x, y, z, c;
};

PatternCoeffs pattern_for_speaker(int v, int n) {
  const int member = v % 2;
  if (v < 4) {
    return {0, member == 0 ? 1 : n - 1, 1 + (v / 2) % std::max(1, n - 1), v % n};
  }
  const int g = (v - 4) / 2;
  return {member == 0 ? 1 : n - 1, g % n, (g + 1) % n, (2 * g) % n};
}

std::vector<double> pattern_rows(int rows, int n, int order, const PatternCoeffs& p,
                                 double noise) {
  std::vector<double> table(static_cast<size_t>(rows) * n, noise / (n - 1));
  for (int row = 0; row < rows; ++row) {
    int code = row;
    const int k = code % n;
    code /= n;
    const int j = order >= 2 ? code % n : 0;
    code /= n;
    const int i = order >= 3 ? code % n : 0;
    const int target = ((p.x * i + p.y * j + p.z * k + p.c) % n + n) % n;
    table[static_cast<size_t>(row) * n + target] = 1.0 - noise;
  }
  return table;
}

void apply_temperature(std::vector<double>& table, int cols, double temperature) {
  if (temperature == 1.0) return;
  const int rows = static_cast<int>(table.size()) / cols;
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      double& v = table[static_cast<size_t>(r) * cols + c];
      v = std::pow(v, 1.0 / temperature);
      sum += v;
    }
    for (int c = 0; c < cols; ++c) table[static_cast<size_t>(r) * cols + c] /= sum;
  }
}

// Shared state centers, redrawn until they are well separated relative to
// the within-state spread.
std::vector<std::vector<double>> shared_centers(const SynthSpec& spec) {
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const double min_dist = 4.0 * spec.emission_stddev;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::vector<double>> centers(spec.num_states,
                                             std::vector<double>(spec.feature_dim));
    for (auto& center : centers)
      for (double& v : center) v = spec.emission_spread * (2.0 * unit_double(rng) - 1.0);
    bool ok = true;
    for (int a = 0; a < spec.num_states && ok; ++a)
      for (int b = a + 1; b < spec.num_states && ok; ++b) {
        double d2 = 0.0;
        for (int d = 0; d < spec.feature_dim; ++d) {
          const double diff = centers[a][d] - centers[b][d];
          d2 += diff * diff;
        }
        if (d2 < min_dist * min_dist) ok = false;
      }
    if (ok) return centers;
  }
  throw DataError("shared_centers: could not separate state centers; "
                  "lower emission_stddev or raise emission_spread");
}

std::string speaker_name(int v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "speaker%03d", v);
  return buf;
}

std::string utterance_name(const std::string& speaker, const std::string& env,
                           const std::string& split, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return speaker + "_" + env + "_" + split + "_" + buf + ".feat";
}

}  // namespace

void SynthSpec::validate() const {
  if (num_speakers < 1) throw DataError("SynthSpec: num_speakers must be >= 1");
  if (num_states < 2) throw DataError("SynthSpec: num_states must be >= 2");
  if (order < 1 || order > 3) throw DataError("SynthSpec: order must be 1, 2, or 3");
  if (feature_dim < 1) throw DataError("SynthSpec: feature_dim must be >= 1");
  if (train_utterances < 1) throw DataError("SynthSpec: train_utterances must be >= 1");
  if (test_utterances < 0) throw DataError("SynthSpec: test_utterances must be >= 0");
  if (min_frames < 1 || max_frames < min_frames)
    throw DataError("SynthSpec: need max_frames >= min_frames >= 1");
  if (!(emission_spread > 0.0) || !(emission_stddev > 0.0))
    throw DataError("SynthSpec: emission spread and stddev must be > 0");
  if (speaker_jitter < 0.0) throw DataError("SynthSpec: speaker_jitter must be >= 0");
  if (!(pattern_noise > 0.0) || pattern_noise >= 1.0)
    throw DataError("SynthSpec: pattern_noise must be in (0, 1)");
  if (!(distortion.scale > 0.0)) throw DataError("SynthSpec: distortion scale must be > 0");
  if (!(distortion.temperature > 0.0))
    throw DataError("SynthSpec: distortion temperature must be > 0");
}

HmmModel make_speaker_generator(const SynthSpec& spec, int speaker_index) {
  spec.validate();
  if (speaker_index < 0 || speaker_index >= spec.num_speakers)
    throw DataError("make_speaker_generator: speaker index out of range");

  const int n = spec.num_states;
  HmmModel model;
  model.order = spec.order;
  model.num_states = n;
  model.initial.assign(n, 1.0 / n);
  for (int level = 1; level < spec.order; ++level)
    model.transition_level(level)
        .assign(static_cast<size_t>(model.num_contexts(level)) * n, 1.0 / n);
  model.transition_level(spec.order) =
      pattern_rows(model.num_contexts(spec.order), n, spec.order,
                   pattern_for_speaker(speaker_index, n), spec.pattern_noise);

  const auto centers = shared_centers(spec);
  std::mt19937_64 rng(spec.seed + 0x9e3779b97f4a7c15ULL * (speaker_index + 1));
  model.emissions.resize(n);
  for (int s = 0; s < n; ++s) {
    GaussianMixture& gmm = model.emissions[s];
    gmm.weights = {1.0};
    gmm.means.resize(1);
    gmm.means[0].resize(spec.feature_dim);
    for (int d = 0; d < spec.feature_dim; ++d)
      gmm.means[0][d] = centers[s][d] + spec.speaker_jitter * normal_double(rng);
    gmm.variances.assign(
        1, std::vector<double>(spec.feature_dim, spec.emission_stddev * spec.emission_stddev));
  }
  model.validate();
  return model;
}

std::vector<int> sample_state_path(const HmmModel& model, int num_frames,
                                   std::mt19937_64& rng) {
  if (num_frames < 1) throw DataError("sample_state_path: need at least one frame");
  const int n = model.num_states;
  std::vector<int> path(num_frames);
  path[0] = sample_row(model.initial, rng);
  int ctx = path[0];
  int len = 1;
  int roll = 1;
  for (int i = 0; i < model.order - 1; ++i) roll *= n;
  for (int t = 1; t < num_frames; ++t) {
    const auto& table = model.transition_level(std::min(t, model.order));
    path[t] = sample_row({table.data() + static_cast<size_t>(ctx) * n, static_cast<size_t>(n)},
                         rng);
    if (len < model.order) {
      ctx = ctx * n + path[t];
      ++len;
    } else {
      ctx = (ctx % roll) * n + path[t];
    }
  }
  return path;
}

FeatureSequence sample_sequence(const HmmModel& model, int num_frames,
                                std::mt19937_64& rng) {
  const std::vector<int> path = sample_state_path(model, num_frames, rng);
  FeatureSequence seq;
  seq.dim = model.feature_dim();
  seq.data.resize(static_cast<size_t>(num_frames) * seq.dim);
  for (int t = 0; t < num_frames; ++t) {
    const GaussianMixture& gmm = model.emissions[path[t]];
    const int m = sample_row(gmm.weights, rng);
    for (int d = 0; d < seq.dim; ++d)
      seq.at(t, d) = gmm.means[m][d] + std::sqrt(gmm.variances[m][d]) * normal_double(rng);
  }
  return seq;
}

SynthDataset generate_dataset(const SynthSpec& spec) {
  spec.validate();
  SynthDataset dataset;
  dataset.generators.reserve(spec.num_speakers);

  const int neutral_test = (spec.test_utterances + 1) / 2;
  const int shouted_test = spec.test_utterances / 2;

  for (int v = 0; v < spec.num_speakers; ++v) {
    HmmModel generator = make_speaker_generator(spec, v);
    HmmModel shouted_generator = generator;
    apply_temperature(shouted_generator.transition_level(spec.order), spec.num_states,
                      spec.distortion.temperature);

    const std::string speaker = speaker_name(v);
    std::mt19937_64 rng(spec.seed + 0xd1b54a32d192ed03ULL * (v + 1));
    auto frames = [&]() {
      return spec.min_frames +
             static_cast<int>(rng() % static_cast<std::uint64_t>(spec.max_frames -
                                                                 spec.min_frames + 1));
    };

    for (int u = 0; u < spec.train_utterances; ++u) {
      LabeledUtterance utt;
      utt.speaker_id = speaker;
      utt.environment = "neutral";
      utt.path = utterance_name(speaker, "neutral", "train", u);
      utt.features = sample_sequence(generator, frames(), rng);
      dataset.train.push_back(std::move(utt));
    }
    for (int u = 0; u < neutral_test; ++u) {
      LabeledUtterance utt;
      utt.speaker_id = speaker;
      utt.environment = "neutral";
      utt.path = utterance_name(speaker, "neutral", "test", u);
      utt.features = sample_sequence(generator, frames(), rng);
      dataset.test.push_back(std::move(utt));
    }
    for (int u = 0; u < shouted_test; ++u) {
      LabeledUtterance utt;
      utt.speaker_id = speaker;
      utt.environment = "shouted";
      utt.path = utterance_name(speaker, "shouted", "test", u);
      utt.features = sample_sequence(shouted_generator, frames(), rng);
      for (double& x : utt.features.data)
        x = spec.distortion.scale * x + spec.distortion.offset;
      dataset.test.push_back(std::move(utt));
    }
    dataset.generators.push_back(std::move(generator));
  }
  return dataset;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_synth_spec: cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "HOHMM_SYNTH" || !in)
    throw DataError("load_synth_spec: " + path + " is not a synth spec");
  if (version != 1)
    throw DataError("load_synth_spec: unsupported version " + std::to_string(version));

  SynthSpec spec;
  std::string key;
  while (in >> key) {
    if (key == "num_speakers") in >> spec.num_speakers;
    else if (key == "num_states") in >> spec.num_states;
    else if (key == "order") in >> spec.order;
    else if (key == "feature_dim") in >> spec.feature_dim;
    else if (key == "train_utterances") in >> spec.train_utterances;
    else if (key == "test_utterances") in >> spec.test_utterances;
    else if (key == "min_frames") in >> spec.min_frames;
    else if (key == "max_frames") in >> spec.max_frames;
    else if (key == "emission_spread") in >> spec.emission_spread;
    else if (key == "emission_stddev") in >> spec.emission_stddev;
    else if (key == "speaker_jitter") in >> spec.speaker_jitter;
    else if (key == "pattern_noise") in >> spec.pattern_noise;
    else if (key == "distort_scale") in >> spec.distortion.scale;
    else if (key == "distort_offset") in >> spec.distortion.offset;
    else if (key == "distort_temperature") in >> spec.distortion.temperature;
    else if (key == "seed") in >> spec.seed;
    else throw DataError("load_synth_spec: unknown key '" + key + "' in " + path);
    if (!in) throw DataError("load_synth_spec: bad value for '" + key + "' in " + path);
  }
  spec.validate();
  return spec;
}

}  // namespace hohmm
