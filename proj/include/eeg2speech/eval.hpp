#pragma once

#include "eeg2speech/acoustic.hpp"
#include "eeg2speech/common.hpp"
#include "eeg2speech/dataio.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eeg2speech::eval {

/// sqrt(mean((pred - truth)^2)). Throws DataError on empty or unequal input.
double rmse(std::span<const double> pred, std::span<const double> truth);
double rmse(const RowMatrix& pred, const RowMatrix& truth);

/// Predicted and truth waveforms may differ by this many samples before a warning.
inline constexpr std::size_t kLengthTolerance = 15;

enum class Scope { Synthesis, Acoustic };
std::string to_string(Scope s);

struct MetricRow {
  int subject = 0;
  std::string condition;
  std::string kind;  // "f1".."f16" for acoustic rows, empty for synthesis
  double rmse = 0.0;
  std::optional<double> baseline_rmse;
  std::size_t count = 0;  // trials (synthesis) or frames (acoustic) behind the row
};

struct TrialMetric {
  std::string id;
  int subject = 0;
  std::string condition;
  double rmse = 0.0;
  std::optional<double> baseline_rmse;
};

struct MetricsReport {
  Scope scope = Scope::Synthesis;
  std::vector<MetricRow> rows;
  std::vector<TrialMetric> trials;  // synthesis only
  std::vector<std::string> warnings;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  /// Pretty JSON with sorted keys; byte-identical for identical content.
  void write_json(const std::filesystem::path& path) const;
  /// subject,condition,kind,rmse,baseline_rmse,count
  void write_csv(const std::filesystem::path& path) const;
};

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

struct SynthesisCase {
  std::string id;
  int subject = 0;
  dataio::Condition condition = dataio::Condition::Spoken;
  RowMatrix input;  // T x 31 model input
  Signal truth;     // reference waveform on the evaluation scale
};

using WavePredictor = std::function<Signal(const SynthesisCase&)>;

/// Per-trial RMSE after truncating to the common length, then the mean per
/// subject x condition. `baseline` (a constant prediction, e.g. the training
/// mean) is scored alongside when given.
MetricsReport evaluate_synthesis(const WavePredictor& predict, const std::vector<SynthesisCase>& cases,
                                 std::optional<double> baseline = std::nullopt);

struct AcousticCase {
  std::string id;
  int subject = 0;
  dataio::Condition condition = dataio::Condition::Spoken;
  RowMatrix input;                   // frames x 30 reduced EEG features
  std::map<int, RowMatrix> truth;    // kind index -> frames x dim
};

using FeaturePredictor = std::function<RowMatrix(const AcousticCase&)>;

/// One row per kind (f1..f16) per subject x condition: RMSE pooled over all test
/// frames and dimensions of the kind. Every kind needs a predictor.
MetricsReport evaluate_acoustic(const std::map<int, FeaturePredictor>& predictors,
                                const std::vector<AcousticCase>& cases,
                                const std::map<int, Eigen::RowVectorXd>& baselines = {});

/// 10*log10(power / max power) clipped below at floor_db; silence maps to floor_db.
RowMatrix power_to_db(const RowMatrix& power, double floor_db = -80.0);

struct SpectrogramFiles {
  std::filesystem::path csv, pgm;
  int frames = 0, bins = 0;
};

/// STFT log-power of `wave` as <prefix>.csv (frames x bins, dB) and <prefix>.pgm
/// (8-bit grayscale, time left to right, low frequencies at the bottom).
/// hop = 0 uses the 31 Hz acoustic frame grid.
SpectrogramFiles spectrogram_export(std::span<const double> wave, int sample_rate_hz,
                                    const std::filesystem::path& out_prefix, int fft_size = 1024, int hop = 0);

}  // namespace eeg2speech::eval
