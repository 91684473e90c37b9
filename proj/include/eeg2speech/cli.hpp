#pragma once

#include "eeg2speech/dataio.hpp"
#include "eeg2speech/eeg_pipeline.hpp"
#include "eeg2speech/nn/models.hpp"
#include "eeg2speech/nn/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eeg2speech::cli {

/// Every knob of the pipeline. Defaults are the reference model settings where one exists.
struct RunConfig {
  // [paths]
  std::string data_root;  // empty: <out_dir>/data
  std::string out_dir = "out";
  // [run]
  std::uint64_t seed = 0;
  int log_every = 0;  // epochs between progress lines on stderr; 0 = silent
  // [data] synthetic corpus for gen-data
  int n_trials = 50;
  double duration_s = 2.0;
  int n_subjects = 1;
  std::vector<dataio::Condition> conditions = {dataio::Condition::Spoken};
  int audio_rate_hz = 16000;
  // [preprocess]
  eeg::PreprocessOptions preprocess;
  // [features]
  double frame_rate_hz = 31.0;
  int stat_window = 0;  // 0: window = hop
  // [kpca]
  int kpca_dim = 30;
  int kpca_degree = 3;
  double kpca_gamma = 1.0 / 155.0;
  double kpca_coef0 = 1.0;
  bool kpca_per_subject = true;
  int kpca_max_train_frames = 1500;
  // [acoustic]
  int acoustic_rate_hz = 15000;
  int acoustic_fft_size = 1024;
  // [split]
  dataio::SplitRatios split;
  // [synthesis]
  nn::SynthesisConfig synth;
  nn::TrainConfig synth_train{.epochs = 5000, .batch_size = 100, .lr = 1e-3};
  // [regression]
  nn::RegressionConfig regress;
  nn::TrainConfig regress_train{.epochs = 500, .batch_size = 100, .lr = 1e-3};
  // [gradcheck]
  int gradcheck_coordinates = 200;
  double gradcheck_epsilon = 1e-5;

  std::filesystem::path data_dir() const;
  std::filesystem::path out_path() const { return out_dir; }

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// INI-style text: `[section]` headers, `key = value` lines, `#`/`;` comments.
/// Unknown keys, syntax errors and out-of-range values throw ConfigError with
/// the line number. Missing keys keep their defaults.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Every key with its resolved value; parse_config_text(format_config(c)) == c.
std::string format_config(const RunConfig& config);
/// Resolved config minus the [paths] section, for reproducibility hashes.
std::string format_config_for_hash(const RunConfig& config);

struct RunFilter {
  std::optional<int> subject;
  std::optional<dataio::Condition> condition;
  std::optional<int> kind;  // acoustic kind index 0..15
};

inline constexpr const char* kCommands[] = {"gen-data",       "preprocess",    "extract-eeg-feats", "fit-kpca",
                                            "extract-acoustic", "split",       "train-synth",       "train-regress",
                                            "eval-synth",     "eval-regress",  "export-spectrogram", "grad-check"};

/// Runs one subcommand and returns its JSON summary. Library errors propagate.
nlohmann::json run_command(const std::string& command, const RunConfig& config, const RunFilter& filter = {});

/// Full command line handling: prints one JSON line to `out`, diagnostics to
/// `err`, and returns 0 ok, 1 usage/config error, 2 data error, 3 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eeg2speech::cli
