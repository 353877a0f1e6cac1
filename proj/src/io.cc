// src/io.cc

#include "hohmm/io.h"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hohmm/errors.h"

namespace hohmm {

namespace {

constexpr int kValuesPerLine = 8;

void append_values(std::string& out, std::span<const double> values) {
  for (size_t i = 0; i < values.size(); ++i) {
    out += format_double(values[i]);
    out += (i + 1) % kValuesPerLine == 0 || i + 1 == values.size() ? '\n' : ' ';
  }
}

class TokenReader {
 public:
  TokenReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path);
  }

  std::string token(const char* what) {
    std::string t;
    if (!(in_ >> t)) throw DataError(path_ + ": expected " + std::string(what));
    return t;
  }

  void expect(const char* literal) {
    const std::string t = token(literal);
    if (t != literal)
      throw DataError(path_ + ": expected '" + literal + "', got '" + t + "'");
  }

  double number(const char* what) {
    const std::string t = token(what);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
      throw DataError(path_ + ": bad number '" + t + "' for " + what);
    return v;
  }

  long integer(const char* what) {
    const double v = number(what);
    const long i = static_cast<long>(v);
    if (static_cast<double>(i) != v)
      throw DataError(path_ + ": expected integer for " + std::string(what));
    return i;
  }

  std::uint64_t hex64(const char* what) {
    const std::string t = token(what);
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(t.c_str(), &end, 16);
    if (end != t.c_str() + t.size())
      throw DataError(path_ + ": bad fingerprint '" + t + "'");
    return v;
  }

  void values(std::span<double> out, const char* what) {
    for (double& v : out) v = number(what);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

std::string hex_string(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fingerprint(const FeatureConfig& c) {
  std::string s = "feature_config v1";
  s += " sr=" + std::to_string(c.sample_rate_hz);
  s += " flen=" + format_double(c.frame_length_ms);
  s += " fshift=" + format_double(c.frame_shift_ms);
  s += " preemph=" + format_double(c.preemphasis);
  s += " filters=" + std::to_string(c.num_mel_filters);
  s += " cepstra=" + std::to_string(c.num_cepstra);
  s += " deltaw=" + std::to_string(c.delta_window);
  s += " mellow=" + format_double(c.mel_low_hz);
  s += " melhigh=" + format_double(c.mel_high_hz);
  s += " c0=" + std::to_string(c.include_c0 ? 1 : 0);
  s += " cmn=" + std::to_string(c.cepstral_mean_norm ? 1 : 0);
  return fnv1a64(s);
}

std::uint64_t fingerprint(const TrainConfig& c) {
  std::string s = "train_config v1";
  s += " order=" + std::to_string(c.order);
  s += " states=" + std::to_string(c.num_states);
  s += " mixtures=" + std::to_string(c.num_mixtures);
  s += " iters=" + std::to_string(c.max_iterations);
  s += " tol=" + format_double(c.log_likelihood_tol);
  s += " tfloor=" + format_double(c.transition_floor);
  s += " vfloor=" + format_double(c.variance_floor);
  s += " seed=" + std::to_string(c.seed);
  s += std::string(" topology=") + (c.topology == Topology::kErgodic ? "ergodic" : "left_to_right");
  return fnv1a64(s);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

void save_model(const std::string& path, const HmmModel& model,
                std::uint64_t feature_fingerprint, std::uint64_t train_fingerprint) {
  model.validate();
  std::string out;
  out += "HOHMM_MODEL 1\n";
  out += "order " + std::to_string(model.order) + "\n";
  out += "num_states " + std::to_string(model.num_states) + "\n";
  out += "feature_dim " + std::to_string(model.feature_dim()) + "\n";
  out += "num_mixtures " + std::to_string(model.num_mixtures()) + "\n";
  out += "feature_fingerprint " + hex_string(feature_fingerprint) + "\n";
  out += "train_fingerprint " + hex_string(train_fingerprint) + "\n";
  out += "initial\n";
  append_values(out, model.initial);
  for (int level = 1; level <= model.order; ++level) {
    out += "trans" + std::to_string(level) + "\n";
    append_values(out, model.transition_level(level));
  }
  for (int s = 0; s < model.num_states; ++s) {
    const GaussianMixture& gmm = model.emissions[s];
    out += "state " + std::to_string(s) + "\n";
    out += "weights\n";
    append_values(out, gmm.weights);
    for (int m = 0; m < gmm.num_components(); ++m) {
      out += "mean " + std::to_string(m) + "\n";
      append_values(out, gmm.means[m]);
      out += "var " + std::to_string(m) + "\n";
      append_values(out, gmm.variances[m]);
    }
  }
  out += "end\n";
  write_text_atomic(path, out);
}

LoadedModel load_model(const std::string& path) {
  TokenReader reader(path);
  reader.expect("HOHMM_MODEL");
  const long version = reader.integer("format version");
  if (version != 1)
    throw DataError(path + ": unsupported model format version " + std::to_string(version));

  LoadedModel loaded;
  HmmModel& model = loaded.model;
  reader.expect("order");
  model.order = static_cast<int>(reader.integer("order"));
  reader.expect("num_states");
  model.num_states = static_cast<int>(reader.integer("num_states"));
  reader.expect("feature_dim");
  const int dim = static_cast<int>(reader.integer("feature_dim"));
  reader.expect("num_mixtures");
  const int mixtures = static_cast<int>(reader.integer("num_mixtures"));
  reader.expect("feature_fingerprint");
  loaded.feature_fingerprint = reader.hex64("feature fingerprint");
  reader.expect("train_fingerprint");
  loaded.train_fingerprint = reader.hex64("train fingerprint");

  if (model.order < 1 || model.order > 3 || model.num_states < 1 || dim < 1 || mixtures < 1)
    throw DataError(path + ": bad model header");

  const int n = model.num_states;
  reader.expect("initial");
  model.initial.resize(n);
  reader.values(model.initial, "initial");
  for (int level = 1; level <= model.order; ++level) {
    reader.expect(("trans" + std::to_string(level)).c_str());
    auto& table = model.transition_level(level);
    table.resize(static_cast<size_t>(model.num_contexts(level)) * n);
    reader.values(table, "transition table");
  }
  model.emissions.resize(n);
  for (int s = 0; s < n; ++s) {
    reader.expect("state");
    if (reader.integer("state index") != s) throw DataError(path + ": states out of order");
    GaussianMixture& gmm = model.emissions[s];
    reader.expect("weights");
    gmm.weights.resize(mixtures);
    reader.values(gmm.weights, "weights");
    gmm.means.assign(mixtures, std::vector<double>(dim));
    gmm.variances.assign(mixtures, std::vector<double>(dim));
    for (int m = 0; m < mixtures; ++m) {
      reader.expect("mean");
      if (reader.integer("component index") != m)
        throw DataError(path + ": components out of order");
      reader.values(gmm.means[m], "mean");
      reader.expect("var");
      if (reader.integer("component index") != m)
        throw DataError(path + ": components out of order");
      reader.values(gmm.variances[m], "variance");
    }
  }
  reader.expect("end");
  model.validate();
  return loaded;
}

void save_features(const std::string& path, const FeatureSequence& features,
                   std::uint64_t config_fingerprint) {
  features.validate();
  std::string out;
  out += "HOHMM_FEATURES 1\n";
  out += "dim " + std::to_string(features.dim) + "\n";
  out += "frames " + std::to_string(features.num_frames()) + "\n";
  out += "config_fingerprint " + hex_string(config_fingerprint) + "\n";
  for (int t = 0; t < features.num_frames(); ++t) {
    for (int d = 0; d < features.dim; ++d) {
      out += format_double(features.at(t, d));
      out += d + 1 == features.dim ? '\n' : ' ';
    }
  }
  write_text_atomic(path, out);
}

LoadedFeatures load_features(const std::string& path) {
  TokenReader reader(path);
  reader.expect("HOHMM_FEATURES");
  const long version = reader.integer("format version");
  if (version != 1)
    throw DataError(path + ": unsupported feature format version " + std::to_string(version));

  LoadedFeatures loaded;
  reader.expect("dim");
  loaded.features.dim = static_cast<int>(reader.integer("dim"));
  reader.expect("frames");
  const long frames = reader.integer("frames");
  reader.expect("config_fingerprint");
  loaded.config_fingerprint = reader.hex64("config fingerprint");
  if (loaded.features.dim < 1 || frames < 1) throw DataError(path + ": bad feature header");
  loaded.features.data.resize(static_cast<size_t>(frames) * loaded.features.dim);
  reader.values(loaded.features.data, "feature value");
  loaded.features.validate();
  return loaded;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    ManifestEntry entry;
    std::string* fields[4] = {&entry.speaker_id, &entry.environment, &entry.split,
                              &entry.path};
    size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const size_t tab = line.find('\t', start);
      if (f < 3 && tab == std::string::npos)
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": expected 4 tab-separated fields");
      *fields[f] = line.substr(start, tab == std::string::npos ? std::string::npos
                                                               : tab - start);
      start = tab + 1;
    }
    if (entry.speaker_id.empty() || entry.environment.empty() || entry.path.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty field");
    if (entry.split != "train" && entry.split != "test")
      throw DataError(path + ":" + std::to_string(line_no) + ": split must be train or test");
    entries.push_back(std::move(entry));
  }
  return entries;
}

void save_manifest(const std::string& path, std::span<const ManifestEntry> entries) {
  std::string out;
  for (const auto& e : entries)
    out += e.speaker_id + "\t" + e.environment + "\t" + e.split + "\t" + e.path + "\n";
  write_text_atomic(path, out);
}

void save_train_report(const std::string& path, const TrainReport& report) {
  std::string out;
  out += "HOHMM_TRAIN_REPORT 1\n";
  out += "iterations " + std::to_string(report.iterations_run) + "\n";
  out += std::string("converged ") + (report.converged ? "1" : "0") + "\n";
  out += "max_decrease " + format_double(report.max_decrease) + "\n";
  for (double ll : report.log_likelihoods)
    out += "log_likelihood " + format_double(ll) + "\n";
  for (const auto& note : report.notes) out += "note " + note + "\n";
  write_text_atomic(path, out);
}

}  // namespace hohmm
