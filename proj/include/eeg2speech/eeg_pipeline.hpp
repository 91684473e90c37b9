#pragma once

#include "eeg2speech/common.hpp"
#include "eeg2speech/dataio.hpp"
#include "eeg2speech/dsp.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace eeg2speech::eeg {

struct PreprocessOptions {
  int bandpass_order = 4;
  double bandpass_lo_hz = 0.1;
  double bandpass_hi_hz = 70.0;
  double notch_hz = 60.0;
  double notch_q = 30.0;
  bool zero_phase = true;  // false: causal single pass
  bool ica = true;
  double kurtosis_threshold = 8.0;
  std::uint64_t ica_seed = 0;
  int ica_max_iter = 200;
  double ica_tol = 1e-4;
  bool zscore = true;
};

struct CleanEeg {
  struct Flags {
    bool bandpassed = false;
    bool notched = false;
    bool ica_cleaned = false;
    bool zscored = false;
  };

  int sample_rate_hz = 1000;
  RowMatrix data;  // 31 x samples
  Flags flags;
  std::vector<int> removed_components;
  bool ica_converged = true;
};

/// Band-pass, notch, optional ICA artifact rejection, then per-channel z-score.
/// Channels with std < 1e-12 become all-zero instead of NaN.
CleanEeg preprocess_eeg(const dataio::EegRecording& rec, const PreprocessOptions& options = {});

/// Per-channel z-score in place (population variance).
void zscore_rows(RowMatrix& data);

struct FrameStats {
  double rms = 0.0;
  double zcr = 0.0;
  double mwa = 0.0;
  double kurtosis = 0.0;
  double pse = 0.0;
};

inline constexpr int kStatsPerChannel = 5;
inline constexpr int kStatFeatureDim = dataio::EegRecording::kChannels * kStatsPerChannel;  // 155
inline constexpr int kMovingAverageLen = 8;

/// rms, zero-crossing rate (sign changes / (len-1), zero counts as positive),
/// mean of the 8-sample moving average, excess kurtosis (0 when m2 < 1e-12) and
/// power spectral entropy over the positive-frequency periodogram bins normalized
/// by log(N) (0 when the frame has no AC power). Requires len >= 8.
FrameStats frame_stats(std::span<const double> frame);

struct StatFeatureSeq {
  RowMatrix values;  // frames x 155, channel-major: ch1[rms,zcr,mwa,kurt,pse], ch2[...], ...
  dsp::FrameGrid grid;
};

/// Frame i covers samples [i*hop, i*hop + window_len).
int stat_frame_count(Eigen::Index samples, const dsp::FrameGrid& grid);
StatFeatureSeq extract_stat_features(const CleanEeg& clean, const dsp::FrameGrid& grid);

}  // namespace eeg2speech::eeg
