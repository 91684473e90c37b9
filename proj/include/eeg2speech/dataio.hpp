#pragma once

#include "eeg2speech/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace eeg2speech::dataio {

struct AudioClip {
  int sample_rate_hz = 16000;
  Signal samples;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
  /// Throws DataError unless rate > 0, length >= 1 and every sample is finite in [-1, 1].
  void validate() const;
};

/// 31 channels, channel-major (row = channel, column = time sample), microvolts.
struct EegRecording {
  static constexpr int kChannels = 31;
  int sample_rate_hz = 1000;
  RowMatrix data;

  Eigen::Index samples() const { return data.cols(); }
  double duration_s() const { return static_cast<double>(data.cols()) / sample_rate_hz; }
  void validate() const;
};

enum class Condition { Spoken, Listen };

std::string to_string(Condition c);
Condition parse_condition(const std::string& s);

/// Manifest entry. Paths are relative to the manifest root.
struct TrialRecord {
  std::string id;
  int subject = 1;
  Condition condition = Condition::Spoken;
  std::string eeg_path;
  std::string wav_path;
  std::optional<std::string> transcript;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<TrialRecord> trials;

  std::vector<std::string> ids() const;
  const TrialRecord& find(const std::string& id) const;
  /// Trials matching an optional subject and condition filter.
  DatasetManifest filtered(std::optional<int> subject, std::optional<Condition> condition) const;
};

/// A trial with its signals loaded.
struct LoadedTrial {
  TrialRecord record;
  EegRecording eeg;
  AudioClip audio;
};

// WAV: RIFF, PCM 16-bit mono.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);
/// round(x * 32767) clamped to int16, as written to disk.
std::int16_t quantize_sample(double x);

// EEG: `.csv` (header ch01..ch31, one row per sample, 9 significant digits) or
// `.f32` (little-endian header + float32 rows of 31 channels).
EegRecording read_eeg(const std::filesystem::path& path);
void write_eeg(const std::filesystem::path& path, const EegRecording& rec);
EegRecording read_eeg_csv(const std::filesystem::path& path);
void write_eeg_csv(const std::filesystem::path& path, const EegRecording& rec);
EegRecording read_eeg_binary(const std::filesystem::path& path);
void write_eeg_binary(const std::filesystem::path& path, const EegRecording& rec);

/// JSON array of {id, subject, condition, eeg_path, wav_path[, transcript]}.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
/// Loads signals and checks that EEG and audio durations agree within 100 ms.
LoadedTrial load_trial(const DatasetManifest& manifest, const TrialRecord& record);

/// Plain numeric matrix as CSV, one row per line, 17 significant digits (exact
/// round trip). An optional first line starting with '#' is kept as a comment.
void save_matrix_csv(const std::filesystem::path& path, const RowMatrix& m, const std::string& comment = "");
RowMatrix load_matrix_csv(const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.8, val = 0.1, test = 0.1;
};

struct SplitAssignment {
  std::vector<std::string> train_ids, val_ids, test_ids;
  std::uint64_t seed = 0;
};

/// Seeded random split at utterance granularity. Val and test get floor(n*ratio)
/// trials, train gets the remainder. A pure function of (id set, ratios, seed).
SplitAssignment make_split(const std::vector<std::string>& ids, const SplitRatios& ratios,
                           std::uint64_t seed);
void save_split(const std::filesystem::path& path, const SplitAssignment& split);
SplitAssignment load_split(const std::filesystem::path& path);

struct SyntheticOptions {
  int n_subjects = 1;
  std::vector<Condition> conditions = {Condition::Spoken};
  int audio_rate_hz = 16000;
  double fundamental_hz = 150.0;
  int harmonics = 5;
  /// Baseband weight of the modulated carrier; makes the waveform's conditional
  /// mean follow the latent envelope.
  double carrier_offset = 0.8;
  double latent_uv = 20.0;  // envelope amplitude in EEG, microvolts
  double noise_uv = 10.0;   // per-channel pink noise std, microvolts
};

struct SyntheticTrial {
  EegRecording eeg;
  AudioClip audio;
  Signal latent;  // e(t) at the EEG rate, in [0, 1]
};

/// One trial; depends only on (seed, index, duration, options).
SyntheticTrial make_synthetic_trial(std::uint64_t seed, int index, double duration_s,
                                    const SyntheticOptions& options = {});

/// Writes eeg/<id>.csv, audio/<id>.wav and manifest.json under out_dir.
DatasetManifest generate_synthetic_dataset(int n_trials, double duration_s, std::uint64_t seed,
                                           const std::filesystem::path& out_dir,
                                           const SyntheticOptions& options = {});

}  // namespace eeg2speech::dataio
