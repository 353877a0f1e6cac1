// src/features.cc

#include "hohmm/features.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace hohmm {

namespace {

constexpr double kEnergyFloor = 1e-10;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int FeatureConfig::frame_length_samples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_length_ms / 1000.0));
}

int FeatureConfig::frame_shift_samples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_shift_ms / 1000.0));
}

void FeatureConfig::validate() const {
  if (sample_rate_hz < 1) throw DataError("FeatureConfig: bad sample rate");
  if (!(frame_shift_ms > 0.0) || frame_length_ms < frame_shift_ms)
    throw DataError("FeatureConfig: need frame_length >= frame_shift > 0");
  if (frame_length_samples() < 2) throw DataError("FeatureConfig: frame too short");
  if (num_mel_filters < 1) throw DataError("FeatureConfig: need at least one mel filter");
  if (num_cepstra < 1) throw DataError("FeatureConfig: need at least one cepstrum");
  if (num_cepstra + (include_c0 ? 0 : 1) > num_mel_filters)
    throw DataError("FeatureConfig: more cepstra than mel filters");
  if (delta_window < 1) throw DataError("FeatureConfig: delta window must be >= 1");
  if (!(mel_low_hz >= 0.0) || !(mel_high_hz > mel_low_hz))
    throw DataError("FeatureConfig: bad mel range");
  if (mel_high_hz > sample_rate_hz / 2.0 + 1e-9)
    throw DataError("FeatureConfig: mel_high above Nyquist");
  if (preemphasis < 0.0 || preemphasis >= 1.0)
    throw DataError("FeatureConfig: preemphasis must be in [0, 1)");
}

AudioBuffer load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError(AudioError::Kind::kBadHeader, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t size = bytes.size();

  if (size < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw AudioError(AudioError::Kind::kBadHeader, path + ": not a RIFF/WAVE file");

  bool got_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  size_t off = 12;
  while (off + 8 <= size) {
    const std::uint32_t chunk_size = read_u32(p + off + 4);
    if (off + 8 + chunk_size > size)
      throw AudioError(AudioError::Kind::kBadHeader, path + ": truncated chunk");
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_size < 16)
        throw AudioError(AudioError::Kind::kBadHeader, path + ": short fmt chunk");
      format = read_u16(p + off + 8);
      channels = read_u16(p + off + 10);
      sample_rate = read_u32(p + off + 12);
      bits = read_u16(p + off + 22);
      got_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = p + off + 8;
      data_size = chunk_size;
    }
    off += 8 + chunk_size + (chunk_size & 1);
  }

  if (!got_fmt || data == nullptr)
    throw AudioError(AudioError::Kind::kBadHeader, path + ": missing fmt or data chunk");
  if (format != 1)
    throw AudioError(AudioError::Kind::kNotPcm,
                     path + ": unsupported encoding " + std::to_string(format));
  if (channels != 1)
    throw AudioError(AudioError::Kind::kNotMono,
                     path + ": expected mono, got " + std::to_string(channels) + " channels");
  if (bits != 16)
    throw AudioError(AudioError::Kind::kNot16Bit,
                     path + ": expected 16-bit samples, got " + std::to_string(bits));
  if (data_size < 2)
    throw AudioError(AudioError::Kind::kBadHeader, path + ": empty data chunk");

  AudioBuffer audio;
  audio.sample_rate_hz = static_cast<int>(sample_rate);
  audio.samples.resize(data_size / 2);
  for (size_t i = 0; i < audio.samples.size(); ++i)
    audio.samples[i] =
        static_cast<std::int16_t>(data[2 * i] | (static_cast<std::uint16_t>(data[2 * i + 1]) << 8));
  return audio;
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
  const std::uint32_t data_size = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_size);
  out.append("RIFF");
  put_u32(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, data_size);
  for (std::int16_t s : audio.samples) {
    out.push_back(static_cast<char>(s & 0xff));
    out.push_back(static_cast<char>((s >> 8) & 0xff));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("write_wav: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write_wav: short write to " + path);
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n)
    throw DataError("fft_radix2: size must be a power of two");
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t k = 0; k < len / 2; ++k) {
        const size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

MelFilterBank build_mel_filterbank(const FeatureConfig& config, int nfft) {
  const int bins = nfft / 2 + 1;
  const double bin_hz = static_cast<double>(config.sample_rate_hz) / nfft;
  const int nf = config.num_mel_filters;

  std::vector<double> edges(nf + 2);
  const double mel_low = hz_to_mel(config.mel_low_hz);
  const double mel_high = hz_to_mel(config.mel_high_hz);
  for (int i = 0; i < nf + 2; ++i)
    edges[i] = mel_to_hz(mel_low + (mel_high - mel_low) * i / (nf + 1));

  MelFilterBank bank;
  bank.nfft = nfft;
  bank.center_hz.resize(nf);
  bank.weights.assign(nf, std::vector<double>(bins, 0.0));
  for (int f = 0; f < nf; ++f) {
    const double left = edges[f], center = edges[f + 1], right = edges[f + 2];
    bank.center_hz[f] = center;
    for (int k = 0; k < bins; ++k) {
      const double hz = k * bin_hz;
      if (hz <= left || hz >= right) continue;
      bank.weights[f][k] =
          hz <= center ? (hz - left) / (center - left) : (right - hz) / (right - center);
    }
  }
  return bank;
}

std::vector<double> MelFilterBank::apply(const std::vector<double>& power_spectrum) const {
  std::vector<double> energies(weights.size(), 0.0);
  for (size_t f = 0; f < weights.size(); ++f)
    for (size_t k = 0; k < weights[f].size(); ++k)
      energies[f] += weights[f][k] * power_spectrum[k];
  return energies;
}

FeatureSequence extract_mfcc(const AudioBuffer& audio, const FeatureConfig& config) {
  config.validate();
  if (audio.samples.empty())
    throw AudioError(AudioError::Kind::kTooShort, "extract_mfcc: empty audio");
  if (audio.sample_rate_hz != config.sample_rate_hz)
    throw AudioError(AudioError::Kind::kSampleRateMismatch,
                     "extract_mfcc: audio is " + std::to_string(audio.sample_rate_hz) +
                         " Hz, config expects " + std::to_string(config.sample_rate_hz));

  const int frame_len = config.frame_length_samples();
  const int shift = config.frame_shift_samples();
  const int len = static_cast<int>(audio.samples.size());
  if (len < frame_len)
    throw AudioError(AudioError::Kind::kTooShort, "extract_mfcc: audio shorter than one frame");
  const int t_count = 1 + (len - frame_len) / shift;

  const int nfft = next_pow2(frame_len);
  const int bins = nfft / 2 + 1;
  const MelFilterBank bank = build_mel_filterbank(config, nfft);

  std::vector<double> window(frame_len);
  for (int i = 0; i < frame_len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (frame_len - 1));

  // Orthonormal DCT-II rows for the kept coefficients.
  const int nf = config.num_mel_filters;
  const int first_coeff = config.include_c0 ? 0 : 1;
  std::vector<double> dct(static_cast<size_t>(config.num_cepstra) * nf);
  for (int i = 0; i < config.num_cepstra; ++i) {
    const int row = first_coeff + i;
    const double scale = row == 0 ? std::sqrt(1.0 / nf) : std::sqrt(2.0 / nf);
    for (int j = 0; j < nf; ++j)
      dct[static_cast<size_t>(i) * nf + j] =
          scale * std::cos(std::numbers::pi * row * (2 * j + 1) / (2.0 * nf));
  }

  FeatureSequence out;
  out.dim = config.num_cepstra;
  out.data.resize(static_cast<size_t>(t_count) * out.dim);

  std::vector<double> re(nfft), im(nfft), power(bins), logmel(nf);
  for (int t = 0; t < t_count; ++t) {
    const std::int16_t* src = audio.samples.data() + static_cast<size_t>(t) * shift;
    // Per-frame pre-emphasis keeps stationary signals stationary across frames.
    re[0] = static_cast<double>(src[0]) * (1.0 - config.preemphasis) * window[0];
    for (int i = 1; i < frame_len; ++i)
      re[i] = (static_cast<double>(src[i]) - config.preemphasis * src[i - 1]) * window[i];
    std::fill(re.begin() + frame_len, re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    fft_radix2(re, im);
    for (int k = 0; k < bins; ++k) power[k] = re[k] * re[k] + im[k] * im[k];
    const std::vector<double> energies = bank.apply(power);
    for (int f = 0; f < nf; ++f) logmel[f] = std::log(std::max(energies[f], kEnergyFloor));
    for (int i = 0; i < out.dim; ++i) {
      double acc = 0.0;
      for (int j = 0; j < nf; ++j) acc += dct[static_cast<size_t>(i) * nf + j] * logmel[j];
      out.at(t, i) = acc;
    }
  }

  if (config.cepstral_mean_norm) {
    for (int d = 0; d < out.dim; ++d) {
      double mean = 0.0;
      for (int t = 0; t < t_count; ++t) mean += out.at(t, d);
      mean /= t_count;
      for (int t = 0; t < t_count; ++t) out.at(t, d) -= mean;
    }
  }
  return out;
}

FeatureSequence append_deltas(const FeatureSequence& statics, int window) {
  if (window < 1) throw DataError("append_deltas: window must be >= 1");
  statics.validate();
  const int t_count = statics.num_frames();
  const int d_in = statics.dim;

  double norm = 0.0;
  for (int w = 1; w <= window; ++w) norm += static_cast<double>(w) * w;
  norm *= 2.0;

  FeatureSequence out;
  out.dim = 2 * d_in;
  out.data.resize(static_cast<size_t>(t_count) * out.dim);
  for (int t = 0; t < t_count; ++t) {
    for (int d = 0; d < d_in; ++d) out.at(t, d) = statics.at(t, d);
    for (int d = 0; d < d_in; ++d) {
      double acc = 0.0;
      for (int w = 1; w <= window; ++w) {
        const int ahead = std::min(t + w, t_count - 1);
        const int behind = std::max(t - w, 0);
        acc += w * (statics.at(ahead, d) - statics.at(behind, d));
      }
      out.at(t, d_in + d) = acc / norm;
    }
  }
  return out;
}

FeatureSequence extract_features(const AudioBuffer& audio, const FeatureConfig& config) {
  return append_deltas(extract_mfcc(audio, config), config.delta_window);
}

}  // namespace hohmm
