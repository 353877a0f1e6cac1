// tools/main.cc
//
// Command-line pipeline: feature extraction, per-speaker training,
// identification, evaluation, synthetic data generation, and significance
// testing. Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hohmm/errors.h"
#include "hohmm/features.h"
#include "hohmm/inference.h"
#include "hohmm/io.h"
#include "hohmm/speaker_id.h"
#include "hohmm/stats.h"
#include "hohmm/synth.h"
#include "hohmm/train.h"

namespace fs = std::filesystem;
using namespace hohmm;

namespace {

void add_feature_flags(CLI::App* cmd, FeatureConfig* config) {
  cmd->add_option("--sample-rate", config->sample_rate_hz, "Expected sample rate in Hz");
  cmd->add_option("--frame-length-ms", config->frame_length_ms, "Analysis frame length (ms)");
  cmd->add_option("--frame-shift-ms", config->frame_shift_ms, "Frame shift (ms)");
  cmd->add_option("--preemphasis", config->preemphasis, "Pre-emphasis coefficient");
  cmd->add_option("--mel-filters", config->num_mel_filters, "Number of mel filters");
  cmd->add_option("--cepstra", config->num_cepstra, "Cepstral coefficients per frame");
  cmd->add_option("--delta-window", config->delta_window, "Delta regression window (frames)");
  cmd->add_option("--mel-low", config->mel_low_hz, "Filterbank low edge (Hz)");
  cmd->add_option("--mel-high", config->mel_high_hz, "Filterbank high edge (Hz)");
  cmd->add_flag("--include-c0", config->include_c0, "Keep c0 as the first coefficient");
  cmd->add_flag("--cmn", config->cepstral_mean_norm, "Per-utterance cepstral mean subtraction");
}

void add_train_flags(CLI::App* cmd, TrainConfig* config, std::string* topology) {
  cmd->add_option("--order", config->order, "Markov chain order (1, 2, or 3)");
  cmd->add_option("--states", config->num_states, "States per model");
  cmd->add_option("--mixtures", config->num_mixtures, "Gaussian components per state");
  cmd->add_option("--max-iters", config->max_iterations, "Re-estimation iteration cap");
  cmd->add_option("--tol", config->log_likelihood_tol,
                  "Relative log-likelihood improvement below which training stops");
  cmd->add_option("--transition-floor", config->transition_floor, "Transition probability floor");
  cmd->add_option("--variance-floor", config->variance_floor, "Emission variance floor");
  cmd->add_option("--seed", config->seed, "Initialization seed");
  cmd->add_option("--topology", *topology, "ergodic or left_to_right")
      ->check(CLI::IsMember({"ergodic", "left_to_right"}));
}

std::string resolve(const fs::path& base_dir, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? path : (base_dir / p).string();
}

bool is_wav_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::string_view(magic, 4) == "RIFF";
}

// Features plus the fingerprint they carry: dumps bring their own, WAV input
// is extracted under the current feature config.
std::pair<FeatureSequence, std::uint64_t> load_utterance(const std::string& path,
                                                         const FeatureConfig& config) {
  if (is_wav_file(path))
    return {extract_features(load_wav(path), config), fingerprint(config)};
  const LoadedFeatures loaded = load_features(path);
  return {loaded.features, loaded.config_fingerprint};
}

SpeakerRegistry load_registry(const std::string& models_dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(models_dir))
    throw DataError("models directory not found: " + models_dir);
  for (const auto& entry : fs::directory_iterator(models_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".hmm")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .hmm model files in " + models_dir);

  SpeakerRegistry registry;
  bool first = true;
  for (const auto& file : files) {
    LoadedModel loaded = load_model(file.string());
    if (first) {
      registry.feature_fingerprint = loaded.feature_fingerprint;
      registry.train_fingerprint = loaded.train_fingerprint;
      first = false;
    } else if (loaded.feature_fingerprint != registry.feature_fingerprint ||
               loaded.train_fingerprint != registry.train_fingerprint) {
      throw DataError("model " + file.string() +
                      " was produced under a different configuration than its peers");
    }
    registry.models.emplace(file.stem().string(), std::move(loaded.model));
  }
  registry.validate();
  return registry;
}

void check_feature_fingerprint(std::uint64_t expected, std::uint64_t got,
                               const std::string& what) {
  if (expected != got)
    throw DataError("feature config fingerprint mismatch for " + what +
                    " (re-extract with the training-time feature settings)");
}

Topology topology_from_string(const std::string& name) {
  return name == "left_to_right" ? Topology::kLeftToRight : Topology::kErgodic;
}

std::string utterance_file_name(const ManifestEntry& entry, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return entry.speaker_id + "_" + entry.environment + "_" + entry.split + "_" + buf +
         ".feat";
}

// --- subcommand bodies --------------------------------------------------------

struct ExtractArgs {
  std::string manifest;
  std::string out_dir;
  bool keep_going = false;
  FeatureConfig config;
};

int cmd_extract(const ExtractArgs& args) {
  args.config.validate();
  const auto entries = load_manifest(args.manifest);
  fs::create_directories(args.out_dir);
  if (entries.empty()) {
    std::cerr << "warning: manifest " << args.manifest << " lists no utterances\n";
    save_manifest((fs::path(args.out_dir) / "manifest.tsv").string(), entries);
    return 0;
  }

  const fs::path base = fs::path(args.manifest).parent_path();
  const std::uint64_t fp = fingerprint(args.config);
  std::vector<ManifestEntry> out_entries;
  std::vector<std::string> failures;
  int index = 0;
  for (const auto& entry : entries) {
    const std::string src = resolve(base, entry.path);
    try {
      const FeatureSequence features = extract_features(load_wav(src), args.config);
      ManifestEntry out = entry;
      out.path = utterance_file_name(entry, index);
      save_features((fs::path(args.out_dir) / out.path).string(), features, fp);
      out_entries.push_back(std::move(out));
    } catch (const DataError& e) {
      if (!args.keep_going) throw;
      failures.push_back(src + ": " + e.what());
    }
    ++index;
  }
  save_manifest((fs::path(args.out_dir) / "manifest.tsv").string(), out_entries);
  std::cout << "extracted " << out_entries.size() << " of " << entries.size()
            << " utterances to " << args.out_dir << "\n";
  if (!failures.empty()) {
    std::cout << failures.size() << " failed:\n";
    for (const auto& f : failures) std::cout << "  " << f << "\n";
  }
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string out_dir;
  TrainConfig config;
  std::string topology = "ergodic";
  FeatureConfig feature_config;
};

int cmd_train(const TrainArgs& args) {
  TrainConfig config = args.config;
  config.topology = topology_from_string(args.topology);
  config.validate();

  const auto entries = load_manifest(args.manifest);
  const fs::path base = fs::path(args.manifest).parent_path();

  std::map<std::string, std::vector<FeatureSequence>> by_speaker;
  std::set<std::string> all_speakers;
  std::set<std::uint64_t> fingerprints;
  for (const auto& entry : entries) {
    all_speakers.insert(entry.speaker_id);
    if (entry.split != "train") continue;
    auto [features, fp] = load_utterance(resolve(base, entry.path), args.feature_config);
    fingerprints.insert(fp);
    by_speaker[entry.speaker_id].push_back(std::move(features));
  }
  for (const auto& speaker : all_speakers)
    if (!by_speaker.contains(speaker))
      throw DataError("speaker '" + speaker + "' has no training utterances");
  if (by_speaker.empty()) throw DataError("manifest has no train-split utterances");
  if (fingerprints.size() > 1)
    throw DataError("training data mixes feature configurations (" +
                    std::to_string(fingerprints.size()) + " distinct fingerprints)");

  fs::create_directories(args.out_dir);
  const std::uint64_t feature_fp = *fingerprints.begin();
  const std::uint64_t train_fp = fingerprint(config);
  for (const auto& [speaker, data] : by_speaker) {
    TrainReport report;
    const HmmModel model = train_speaker(config, data, &report);
    save_model((fs::path(args.out_dir) / (speaker + ".hmm")).string(), model, feature_fp,
               train_fp);
    save_train_report((fs::path(args.out_dir) / (speaker + ".train.txt")).string(), report);
    std::cout << speaker << ": " << data.size() << " utterances, "
              << report.iterations_run << " iterations, log-likelihood "
              << format_double(report.log_likelihoods.back())
              << (report.converged ? " (converged)" : "") << "\n";
  }
  return 0;
}

struct EvaluateArgs {
  std::string manifest;
  std::string models_dir;
  std::string report_path;
  std::string csv_path;
  std::string score = "viterbi";
  FeatureConfig feature_config;
};

std::string render_report(const EvalReport& report) {
  char line[128];
  std::string text = "environment        correct    total  accuracy\n";
  auto row = [&](const std::string& name, const EnvironmentStats& stats) {
    std::snprintf(line, sizeof line, "%-18s %7d  %7d    %.4f\n", name.c_str(),
                  stats.correct, stats.total, stats.accuracy());
    text += line;
  };
  for (const auto& [env, stats] : report.per_environment) row(env, stats);
  row("average", report.overall());
  text += "\n# confusion: environment\ttrue\tdecided\tcount\n";
  for (const auto& [env, stats] : report.per_environment)
    for (const auto& [truth, decided_row] : stats.confusion)
      for (const auto& [decided, count] : decided_row)
        text += env + "\t" + truth + "\t" + decided + "\t" + std::to_string(count) + "\n";
  return text;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const SpeakerRegistry registry = load_registry(args.models_dir);
  const auto entries = load_manifest(args.manifest);
  const fs::path base = fs::path(args.manifest).parent_path();

  std::vector<LabeledUtterance> test;
  for (const auto& entry : entries) {
    if (entry.split != "test") continue;
    auto [features, fp] = load_utterance(resolve(base, entry.path), args.feature_config);
    check_feature_fingerprint(registry.feature_fingerprint, fp, entry.path);
    LabeledUtterance utt;
    utt.speaker_id = entry.speaker_id;
    utt.environment = entry.environment;
    utt.path = entry.path;
    utt.features = std::move(features);
    test.push_back(std::move(utt));
  }
  if (test.empty()) throw DataError("manifest has no test-split utterances");

  const ScoreMethod method =
      args.score == "forward" ? ScoreMethod::kForward : ScoreMethod::kViterbi;
  const EvalReport report = evaluate(registry, test, method);

  const std::string text = render_report(report);
  std::cout << text;
  if (!args.report_path.empty()) write_text_atomic(args.report_path, text);

  if (!args.csv_path.empty()) {
    std::string csv = "path,true_speaker,environment,decided_speaker,best_score,margin,correct\n";
    for (const auto& d : report.decisions)
      csv += d.path + "," + d.true_speaker + "," + d.environment + "," + d.decided_speaker +
             "," + format_double(d.best_score) + "," + format_double(d.margin) + "," +
             (d.correct ? "1" : "0") + "\n";
    write_text_atomic(args.csv_path, csv);
  }
  return 0;
}

struct IdentifyArgs {
  std::string models_dir;
  std::string input;
  FeatureConfig feature_config;
};

int cmd_identify(const IdentifyArgs& args) {
  const SpeakerRegistry registry = load_registry(args.models_dir);
  auto [features, fp] = load_utterance(args.input, args.feature_config);
  check_feature_fingerprint(registry.feature_fingerprint, fp, args.input);
  const auto rows = score_all(registry, features);
  std::cout << "decision " << rows.front().speaker_id << "\n";
  std::cout << "# rank\tspeaker\tviterbi\tforward\n";
  int rank = 1;
  for (const auto& row : rows)
    std::cout << rank++ << "\t" << row.speaker_id << "\t"
              << format_double(row.viterbi_log_prob) << "\t"
              << format_double(row.forward_log_likelihood) << "\n";
  return 0;
}

struct SynthArgs {
  std::string spec_path;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& args) {
  const SynthSpec spec = load_synth_spec(args.spec_path);
  const SynthDataset dataset = generate_dataset(spec);
  fs::create_directories(args.out_dir);

  // Stamp dumps with a spec-derived fingerprint so train/evaluate enforce
  // consistency exactly as they do for extracted features.
  std::string canonical = "synth v1";
  canonical += " speakers=" + std::to_string(spec.num_speakers);
  canonical += " dim=" + std::to_string(spec.feature_dim);
  canonical += " seed=" + std::to_string(spec.seed);
  const std::uint64_t fp = fnv1a64(canonical);

  std::vector<ManifestEntry> entries;
  auto emit = [&](const LabeledUtterance& utt, const std::string& split) {
    save_features((fs::path(args.out_dir) / utt.path).string(), utt.features, fp);
    entries.push_back({utt.speaker_id, utt.environment, split, utt.path});
  };
  for (const auto& utt : dataset.train) emit(utt, "train");
  for (const auto& utt : dataset.test) emit(utt, "test");
  save_manifest((fs::path(args.out_dir) / "manifest.tsv").string(), entries);
  std::cout << "wrote " << entries.size() << " utterances for " << spec.num_speakers
            << " speakers to " << args.out_dir << "\n";
  return 0;
}

struct TTestArgs {
  std::string csv1;
  std::string csv2;
  double critical = 1.645;
  int column = 0;
  bool welch = false;
};

std::vector<double> read_csv_column(const std::string& path, int column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (column >= static_cast<int>(cells.size()))
      throw DataError(path + ":" + std::to_string(line_no) + ": no column " +
                      std::to_string(column));
    char* end = nullptr;
    const std::string& cell = cells[column];
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) {
      if (line_no == 1) continue;  // header row
      throw DataError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
    }
    values.push_back(v);
  }
  if (values.size() < 2) throw DataError(path + ": need at least two values");
  return values;
}

int cmd_ttest(const TTestArgs& args) {
  const auto v1 = read_csv_column(args.csv1, args.column);
  const auto v2 = read_csv_column(args.csv2, args.column);
  if (v1.size() != v2.size())
    throw DataError("samples differ in length: " + std::to_string(v1.size()) + " vs " +
                    std::to_string(v2.size()));
  const SampleStats s1 = SampleStats::from_values(v1);
  const SampleStats s2 = SampleStats::from_values(v2);
  const TTestResult r =
      args.welch ? welch_t_test(s1, s2, args.critical) : t_test(s1, s2, args.critical);
  std::cout << "n " << s1.n << "\n";
  std::cout << "mean1 " << format_double(s1.mean) << " sd1 " << format_double(s1.sd) << "\n";
  std::cout << "mean2 " << format_double(s2.mean) << " sd2 " << format_double(s2.sd) << "\n";
  std::cout << (args.welch ? "welch_t " : "t ") << format_double(r.t_value) << "\n";
  std::cout << "critical " << format_double(r.critical_value) << "\n";
  std::cout << "significant " << (r.significant ? "yes" : "no") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker identification with first-, second-, and third-order "
               "hidden Markov models"};
  app.require_subcommand(1);

  ExtractArgs extract_args;
  CLI::App* extract = app.add_subcommand(
      "extract", "Convert the WAV files in a manifest to MFCC+delta feature dumps");
  extract->add_option("--manifest", extract_args.manifest, "Input manifest (TSV)")->required();
  extract->add_option("--out", extract_args.out_dir, "Output directory")->required();
  extract->add_flag("--keep-going", extract_args.keep_going,
                    "Skip files that fail instead of aborting");
  add_feature_flags(extract, &extract_args.config);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train", "Train one model per speaker from the manifest's train split");
  train->add_option("--manifest", train_args.manifest, "Input manifest (TSV)")->required();
  train->add_option("--out", train_args.out_dir, "Output directory for .hmm files")->required();
  add_train_flags(train, &train_args.config, &train_args.topology);
  add_feature_flags(train, &train_args.feature_config);

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate",
      "Identify every test-split utterance and report per-environment accuracy. "
      "CSV columns: path,true_speaker,environment,decided_speaker,best_score,margin,correct");
  evaluate->add_option("--manifest", eval_args.manifest, "Input manifest (TSV)")->required();
  evaluate->add_option("--models", eval_args.models_dir, "Directory of .hmm files")->required();
  evaluate->add_option("--report", eval_args.report_path, "Write the accuracy table here");
  evaluate->add_option("--csv", eval_args.csv_path, "Write per-utterance decisions here");
  evaluate->add_option("--score", eval_args.score, "viterbi (default) or forward")
      ->check(CLI::IsMember({"viterbi", "forward"}));
  add_feature_flags(evaluate, &eval_args.feature_config);

  IdentifyArgs identify_args;
  CLI::App* identify = app.add_subcommand(
      "identify", "Score one utterance against every enrolled speaker");
  identify->add_option("--models", identify_args.models_dir, "Directory of .hmm files")
      ->required();
  identify->add_option("--input", identify_args.input, "WAV file or feature dump")->required();
  add_feature_flags(identify, &identify_args.feature_config);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a seeded synthetic dataset (train on neutral, test on both)");
  synth->add_option("--spec", synth_args.spec_path, "Synth spec file")->required();
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();

  TTestArgs ttest_args;
  CLI::App* ttest = app.add_subcommand(
      "ttest", "Two-sample significance test on equal-size CSV columns");
  ttest->add_option("csv1", ttest_args.csv1, "First sample")->required();
  ttest->add_option("csv2", ttest_args.csv2, "Second sample")->required();
  ttest->add_option("--critical", ttest_args.critical, "One-tailed critical value");
  ttest->add_option("--column", ttest_args.column, "Zero-based CSV column");
  ttest->add_flag("--welch", ttest_args.welch, "Use the textbook Welch statistic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(extract)) return cmd_extract(extract_args);
    if (app.got_subcommand(train)) return cmd_train(train_args);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(eval_args);
    if (app.got_subcommand(identify)) return cmd_identify(identify_args);
    if (app.got_subcommand(synth)) return cmd_synth(synth_args);
    if (app.got_subcommand(ttest)) return cmd_ttest(ttest_args);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
