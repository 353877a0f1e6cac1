// hohmm/io.h
//
// Text serialization: model files, feature dumps, dataset manifests, and
// config fingerprints. Floats are printed with 17 significant digits, so
// every round trip is bit-exact. All writes go through a temp file + rename.

#ifndef HOHMM_IO_H_
#define HOHMM_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hohmm/features.h"
#include "hohmm/model.h"
#include "hohmm/train.h"

namespace hohmm {

std::uint64_t fnv1a64(std::string_view bytes);

// Stable hashes of every config field; used to refuse mixing artifacts
// produced under different configurations.
std::uint64_t fingerprint(const FeatureConfig& config);
std::uint64_t fingerprint(const TrainConfig& config);

std::string format_double(double v);  // %.17g

void write_text_atomic(const std::string& path, const std::string& content);

// --- model files -----------------------------------------------------------

struct LoadedModel {
  HmmModel model;
  std::uint64_t feature_fingerprint = 0;
  std::uint64_t train_fingerprint = 0;
};

void save_model(const std::string& path, const HmmModel& model,
                std::uint64_t feature_fingerprint, std::uint64_t train_fingerprint);
LoadedModel load_model(const std::string& path);

// --- feature dumps ----------------------------------------------------------

struct LoadedFeatures {
  FeatureSequence features;
  std::uint64_t config_fingerprint = 0;
};

void save_features(const std::string& path, const FeatureSequence& features,
                   std::uint64_t config_fingerprint);
LoadedFeatures load_features(const std::string& path);

// --- dataset manifests -------------------------------------------------------

// One utterance per line: speaker_id <TAB> environment <TAB> split <TAB> path,
// split in {train, test}.
struct ManifestEntry {
  std::string speaker_id;
  std::string environment;
  std::string split;
  std::string path;
};

std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::string& path, std::span<const ManifestEntry> entries);

// --- train reports -----------------------------------------------------------

void save_train_report(const std::string& path, const TrainReport& report);

}  // namespace hohmm

#endif  // HOHMM_IO_H_
