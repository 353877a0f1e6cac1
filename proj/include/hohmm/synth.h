// hohmm/synth.h
//
// Seeded synthetic datasets for benchmarking the identification pipeline.
//
// Each speaker is a generative HMM. All speakers share one set of
// well-separated emission centers (plus a small per-speaker jitter), so the
// identity signal lives mostly in the transition dynamics: some speakers'
// next state depends on the previous two states, others' on the previous
// three. A "shouted" test condition is simulated by an affine warp of the
// features plus a temperature flattening of the generator dynamics.

#ifndef HOHMM_SYNTH_H_
#define HOHMM_SYNTH_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hohmm/model.h"
#include "hohmm/speaker_id.h"

namespace hohmm {

struct DistortionSpec {
  double scale = 1.0;        // per-dimension feature scale, > 0
  double offset = 0.0;       // per-dimension feature offset
  double temperature = 1.0;  // > 1 flattens transition rows, > 0
};

struct SynthSpec {
  int num_speakers = 5;
  int num_states = 4;
  int order = 3;       // generator chain order
  int feature_dim = 6;
  int train_utterances = 36;  // per speaker, neutral environment
  int test_utterances = 36;   // per speaker, split across neutral/shouted
  int min_frames = 40;
  int max_frames = 60;
  double emission_spread = 3.0;   // scale of the shared state centers
  double emission_stddev = 0.35;  // within-state standard deviation
  double speaker_jitter = 0.0;    // per-speaker offset of state centers
  double pattern_noise = 0.1;     // mass spread off the dominant next state
  DistortionSpec distortion;
  std::uint64_t seed = 1;

  void validate() const;
};

SynthSpec load_synth_spec(const std::string& path);

struct SynthDataset {
  std::vector<LabeledUtterance> train;  // neutral only
  std::vector<LabeledUtterance> test;   // neutral and shouted
  std::vector<HmmModel> generators;     // per speaker, undistorted
};

SynthDataset generate_dataset(const SynthSpec& spec);

// Deterministic per-speaker generator; speakers with an even-index twin
// differ from it only in third-order structure.
HmmModel make_speaker_generator(const SynthSpec& spec, int speaker_index);

// Sampling utilities (also used by training tests).
std::vector<int> sample_state_path(const HmmModel& model, int num_frames,
                                   std::mt19937_64& rng);
FeatureSequence sample_sequence(const HmmModel& model, int num_frames,
                                std::mt19937_64& rng);

}  // namespace hohmm

#endif  // HOHMM_SYNTH_H_
