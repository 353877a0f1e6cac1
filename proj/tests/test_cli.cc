// tests/test_cli.cc
//
// End-to-end checks of the command-line tool via subprocess. The binary path
// comes from $HOHMM_BIN.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "hohmm/features.h"
#include "hohmm/io.h"

using namespace hohmm;
namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* env = std::getenv("HOHMM_BIN");
  REQUIRE(env != nullptr);
  return env;
}

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = binary() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::current_path() / ("scratch_cli_" + std::to_string(::getpid()) + "_" +
                                 std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& name) const { return (path / name).string(); }
  static int counter;
};

int TempDir::counter = 0;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

int count_lines(const std::string& text) {
  return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

AudioBuffer tone(double freq, double seconds) {
  AudioBuffer audio;
  audio.sample_rate_hz = 16000;
  const int count = static_cast<int>(seconds * 16000);
  audio.samples.resize(count);
  for (int i = 0; i < count; ++i)
    audio.samples[i] = static_cast<std::int16_t>(
        std::lround(9000.0 * std::sin(2.0 * 3.14159265358979 * freq * i / 16000.0)));
  return audio;
}

std::string small_synth_spec(int speakers, int train, int test, std::uint64_t seed) {
  return "HOHMM_SYNTH 1\n"
         "num_speakers " + std::to_string(speakers) + "\n"
         "num_states 3\nfeature_dim 3\n"
         "train_utterances " + std::to_string(train) + "\n"
         "test_utterances " + std::to_string(test) + "\n"
         "min_frames 10\nmax_frames 14\n"
         "speaker_jitter 0.3\n"
         "distort_scale 1.05\ndistort_offset 0.1\ndistort_temperature 1.1\n"
         "seed " + std::to_string(seed) + "\n";
}

const std::string kFastTrain = " --states 2 --mixtures 1 --max-iters 3 --order 2";

}  // namespace

TEST_CASE("extract: empty manifest warns and succeeds") {
  TempDir tmp;
  write_file(tmp.str("manifest.tsv"), "");
  const RunResult r =
      run("extract --manifest " + tmp.str("manifest.tsv") + " --out " + tmp.str("feat"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("warning") != std::string::npos);
  CHECK(fs::exists(tmp.str("feat") + "/manifest.tsv"));
}

TEST_CASE("extract: one-second WAV becomes a 98x32 dump") {
  TempDir tmp;
  write_wav(tmp.str("utt.wav"), tone(440.0, 1.0));
  write_file(tmp.str("manifest.tsv"), "alice\tneutral\ttrain\tutt.wav\n");
  const RunResult r =
      run("extract --manifest " + tmp.str("manifest.tsv") + " --out " + tmp.str("feat"));
  REQUIRE(r.exit_code == 0);

  const auto entries = load_manifest(tmp.str("feat") + "/manifest.tsv");
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].speaker_id == "alice");
  const LoadedFeatures dump =
      load_features((fs::path(tmp.str("feat")) / entries[0].path).string());
  CHECK(dump.features.num_frames() == 98);
  CHECK(dump.features.dim == 32);
}

TEST_CASE("extract: corrupt file aborts, or is skipped with --keep-going") {
  TempDir tmp;
  write_wav(tmp.str("good.wav"), tone(500.0, 0.5));
  write_file(tmp.str("bad.wav"), "this is not audio");
  write_file(tmp.str("manifest.tsv"),
             "a\tneutral\ttrain\tgood.wav\nb\tneutral\ttrain\tbad.wav\n");

  const RunResult strict =
      run("extract --manifest " + tmp.str("manifest.tsv") + " --out " + tmp.str("f1"));
  CHECK(strict.exit_code == 2);

  const RunResult lenient = run("extract --manifest " + tmp.str("manifest.tsv") +
                                " --out " + tmp.str("f2") + " --keep-going");
  CHECK(lenient.exit_code == 0);
  CHECK(lenient.output.find("1 failed") != std::string::npos);
  CHECK(load_manifest(tmp.str("f2") + "/manifest.tsv").size() == 1);
}

TEST_CASE("synth: manifest line count matches the spec and bytes reproduce") {
  TempDir tmp;
  write_file(tmp.str("spec.txt"), small_synth_spec(5, 36, 36, 99));
  const RunResult r1 = run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("d1"));
  REQUIRE(r1.exit_code == 0);
  const std::string manifest = slurp(tmp.str("d1") + "/manifest.tsv");
  CHECK(count_lines(manifest) == 5 * 72);

  const RunResult r2 = run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("d2"));
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(tmp.str("d2") + "/manifest.tsv") == manifest);
  const auto entries = load_manifest(tmp.str("d1") + "/manifest.tsv");
  CHECK(slurp((fs::path(tmp.str("d1")) / entries[17].path).string()) ==
        slurp((fs::path(tmp.str("d2")) / entries[17].path).string()));
}

TEST_CASE("train: per-speaker models with the requested tensor rank, bit-stable") {
  TempDir tmp;
  write_file(tmp.str("spec.txt"), small_synth_spec(2, 5, 2, 7));
  REQUIRE(run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("data")).exit_code ==
          0);
  const std::string manifest = tmp.str("data") + "/manifest.tsv";

  for (int order = 1; order <= 3; ++order) {
    const std::string out = tmp.str("models" + std::to_string(order));
    const RunResult r = run("train --manifest " + manifest + " --out " + out +
                            " --states 2 --mixtures 1 --max-iters 2 --order " +
                            std::to_string(order));
    REQUIRE(r.exit_code == 0);
    const LoadedModel m = load_model(out + "/speaker000.hmm");
    CHECK(m.model.order == order);
    CHECK(m.model.trans2.empty() == (order < 2));
    CHECK(m.model.trans3.empty() == (order < 3));
    CHECK(fs::exists(out + "/speaker001.train.txt"));
  }

  const RunResult again = run("train --manifest " + manifest + " --out " + tmp.str("again") +
                              " --states 2 --mixtures 1 --max-iters 2 --order 3");
  REQUIRE(again.exit_code == 0);
  CHECK(slurp(tmp.str("again") + "/speaker000.hmm") ==
        slurp(tmp.str("models3") + "/speaker000.hmm"));
}

TEST_CASE("train: speaker without training utterances is a named error") {
  TempDir tmp;
  write_file(tmp.str("spec.txt"), small_synth_spec(1, 3, 2, 5));
  REQUIRE(run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("data")).exit_code ==
          0);
  // Append a test-only speaker to the manifest.
  std::ofstream(tmp.str("data") + "/manifest.tsv", std::ios::app)
      << "ghost\tneutral\ttest\tspeaker000_neutral_train_0000.feat\n";
  const RunResult r = run("train --manifest " + tmp.str("data") + "/manifest.tsv --out " +
                          tmp.str("models") + kFastTrain);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("ghost") != std::string::npos);
}

TEST_CASE("evaluate: single-speaker dataset scores 1.0 with matching CSV rows") {
  TempDir tmp;
  write_file(tmp.str("spec.txt"), small_synth_spec(1, 4, 6, 31));
  REQUIRE(run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("data")).exit_code ==
          0);
  const std::string manifest = tmp.str("data") + "/manifest.tsv";
  REQUIRE(run("train --manifest " + manifest + " --out " + tmp.str("models") + kFastTrain)
              .exit_code == 0);

  const RunResult r = run("evaluate --manifest " + manifest + " --models " + tmp.str("models") +
                          " --report " + tmp.str("report.txt") + " --csv " + tmp.str("dec.csv"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("1.0000") != std::string::npos);
  CHECK(r.output.find("average") != std::string::npos);
  CHECK(r.output.find("neutral") != std::string::npos);
  CHECK(r.output.find("shouted") != std::string::npos);
  CHECK(fs::exists(tmp.str("report.txt")));
  // Header plus one row per test utterance.
  CHECK(count_lines(slurp(tmp.str("dec.csv"))) == 1 + 6);
}

TEST_CASE("evaluate: refuses feature dumps with a foreign fingerprint") {
  TempDir tmp;
  write_file(tmp.str("spec.txt"), small_synth_spec(1, 4, 2, 13));
  REQUIRE(run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("data")).exit_code ==
          0);
  const std::string manifest = tmp.str("data") + "/manifest.tsv";
  REQUIRE(run("train --manifest " + manifest + " --out " + tmp.str("models") + kFastTrain)
              .exit_code == 0);

  // Re-stamp one test dump with a different fingerprint.
  const auto entries = load_manifest(manifest);
  for (const auto& entry : entries) {
    if (entry.split != "test") continue;
    const std::string dump_path = (fs::path(tmp.str("data")) / entry.path).string();
    const LoadedFeatures dump = load_features(dump_path);
    save_features(dump_path, dump.features, dump.config_fingerprint ^ 0xff);
    break;
  }
  const RunResult r =
      run("evaluate --manifest " + manifest + " --models " + tmp.str("models"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("fingerprint") != std::string::npos);
}

TEST_CASE("identify: prints the decision and one row per speaker") {
  TempDir tmp;
  write_file(tmp.str("spec.txt"), small_synth_spec(3, 5, 2, 57));
  REQUIRE(run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("data")).exit_code ==
          0);
  const std::string manifest = tmp.str("data") + "/manifest.tsv";
  REQUIRE(run("train --manifest " + manifest + " --out " + tmp.str("models") + kFastTrain)
              .exit_code == 0);

  const auto entries = load_manifest(manifest);
  std::string test_dump;
  for (const auto& entry : entries)
    if (entry.split == "test" && entry.speaker_id == "speaker001") {
      test_dump = (fs::path(tmp.str("data")) / entry.path).string();
      break;
    }
  const RunResult r = run("identify --models " + tmp.str("models") + " --input " + test_dump);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.rfind("decision ", 0) == 0);
  CHECK(count_lines(r.output) == 2 + 3);  // decision + header + one row per speaker
}

TEST_CASE("ttest: hand example through CSV files") {
  TempDir tmp;
  write_file(tmp.str("a.csv"), "63\n65\n");
  write_file(tmp.str("b.csv"), "57\n58\n");
  const RunResult r = run("ttest " + tmp.str("a.csv") + " " + tmp.str("b.csv"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("t 5.813776") != std::string::npos);
  CHECK(r.output.find("significant yes") != std::string::npos);

  const RunResult welch = run("ttest " + tmp.str("a.csv") + " " + tmp.str("b.csv") + " --welch");
  REQUIRE(welch.exit_code == 0);
  CHECK(welch.output.find("welch_t") != std::string::npos);

  write_file(tmp.str("c.csv"), "1\n2\n3\n");
  const RunResult unequal = run("ttest " + tmp.str("a.csv") + " " + tmp.str("c.csv"));
  CHECK(unequal.exit_code == 2);
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("").exit_code == 1);
  CHECK(run("nonsense-subcommand").exit_code == 1);
  CHECK(run("train --manifest missing.tsv").exit_code == 1);  // missing --out
}

TEST_CASE("missing files exit with code 2") {
  TempDir tmp;
  CHECK(run("extract --manifest " + tmp.str("nope.tsv") + " --out " + tmp.str("x")).exit_code ==
        2);
  write_file(tmp.str("spec.txt"), "HOHMM_SYNTH 1\nnum_speakers 0\n");
  CHECK(run("synth --spec " + tmp.str("spec.txt") + " --out " + tmp.str("y")).exit_code == 2);
}
