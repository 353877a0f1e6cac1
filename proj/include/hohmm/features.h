// hohmm/features.h
//
// Speech front end: WAV I/O and MFCC + delta feature extraction.

#ifndef HOHMM_FEATURES_H_
#define HOHMM_FEATURES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "hohmm/errors.h"
#include "hohmm/model.h"

namespace hohmm {

struct FeatureConfig {
  int sample_rate_hz = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  double preemphasis = 0.97;
  int num_mel_filters = 26;
  int num_cepstra = 16;        // c1..c16 by default; c0..c15 with include_c0
  int delta_window = 2;
  double mel_low_hz = 0.0;
  double mel_high_hz = 8000.0;
  bool include_c0 = false;
  bool cepstral_mean_norm = false;  // per-utterance mean subtraction

  int frame_length_samples() const;
  int frame_shift_samples() const;
  void validate() const;
};

// Mono 16-bit PCM audio.
struct AudioBuffer {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = 0;
};

class AudioError : public DataError {
 public:
  enum class Kind {
    kBadHeader,
    kNotPcm,
    kNotMono,
    kNot16Bit,
    kSampleRateMismatch,
    kTooShort,
  };
  AudioError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

AudioBuffer load_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& audio);

// Static MFCCs, T x num_cepstra. T = 1 + floor((len - frame_len) / shift).
// Pipeline per frame: pre-emphasis, Hamming window, zero-padded power FFT,
// triangular mel filterbank, log, orthonormal DCT-II.
FeatureSequence extract_mfcc(const AudioBuffer& audio, const FeatureConfig& config);

// Regression-slope deltas over +-window frames, edges clamped. Output
// concatenates the input columns with their deltas (dim doubles).
FeatureSequence append_deltas(const FeatureSequence& statics, int window);

// extract_mfcc + append_deltas with config.delta_window.
FeatureSequence extract_features(const AudioBuffer& audio, const FeatureConfig& config);

// Building blocks, exposed for tests and diagnostics.

// In-place iterative radix-2 FFT; re/im sizes must match and be a power of 2.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

struct MelFilterBank {
  int nfft = 0;
  std::vector<double> center_hz;             // per filter
  std::vector<std::vector<double>> weights;  // filters x (nfft/2 + 1)

  std::vector<double> apply(const std::vector<double>& power_spectrum) const;
};

MelFilterBank build_mel_filterbank(const FeatureConfig& config, int nfft);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace hohmm

#endif  // HOHMM_FEATURES_H_
