#pragma once

#include "eeg2speech/common.hpp"
#include "eeg2speech/dsp.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace eeg2speech::acoustic {

/// The 16 acoustic feature families, in reporting order f1..f16.
enum class FeatureKind {
  BandPower,
  CqtChroma,
  ChromaCens,
  Mel,
  Rms,
  Centroid,
  Bandwidth,
  Contrast,
  Flatness,
  Rolloff,
  Poly,
  Tonnetz,
  Zcr,
  Tempogram,
  Loudness,
  Pitch,
};

inline constexpr std::array<FeatureKind, 16> kAllKinds = {
    FeatureKind::BandPower, FeatureKind::CqtChroma, FeatureKind::ChromaCens, FeatureKind::Mel,
    FeatureKind::Rms,       FeatureKind::Centroid,  FeatureKind::Bandwidth,  FeatureKind::Contrast,
    FeatureKind::Flatness,  FeatureKind::Rolloff,   FeatureKind::Poly,       FeatureKind::Tonnetz,
    FeatureKind::Zcr,       FeatureKind::Tempogram, FeatureKind::Loudness,   FeatureKind::Pitch,
};

inline constexpr std::array<int, 16> kKindDims = {12, 12, 12, 128, 1, 1, 1, 7, 1, 1, 2, 6, 1, 384, 1, 1};
inline constexpr int kTotalDim = 571;

constexpr int feature_dim(FeatureKind k) { return kKindDims[static_cast<std::size_t>(k)]; }
constexpr int kind_index(FeatureKind k) { return static_cast<int>(k); }
/// "band_power", "cqt_chroma", ...
std::string kind_name(FeatureKind k);
/// "f1".."f16"
std::string kind_label(FeatureKind k);
/// Accepts a label ("f10") or a name ("rolloff").
FeatureKind parse_kind(const std::string& s);

struct AcousticOptions {
  int sample_rate_hz = 15000;
  int fft_size = 1024;
  double frame_rate_hz = 31.0;
  double band_fmin_hz = 50.0;
  double band_fmax_hz = 7500.0;
  double mel_fmax_hz = 7500.0;
  double rolloff_fraction = 0.85;
  double contrast_fmin_hz = 200.0;
  double contrast_quantile = 0.2;
  int cens_smoothing = 41;
  int tempogram_window = 384;
  /// Gaussian smoothing of the onset envelope, in frames (0 disables).
  double onset_smoothing_frames = 2.0;
  double pitch_fmin_hz = 60.0;
  double pitch_fmax_hz = 400.0;
  double pitch_clarity = 0.3;

  dsp::FrameGrid grid() const;
};

struct FeatureSequence {
  FeatureKind kind = FeatureKind::Rms;
  RowMatrix values;  // frames x feature_dim(kind)
  dsp::FrameGrid grid;

  int frames() const { return static_cast<int>(values.rows()); }
};

struct AcousticSet {
  std::vector<FeatureSequence> sequences;  // f1..f16

  int frames() const { return sequences.empty() ? 0 : sequences.front().frames(); }
  const FeatureSequence& at(FeatureKind k) const { return sequences.at(static_cast<std::size_t>(k)); }
  /// All kinds side by side: frames x 571.
  RowMatrix concatenated() const;
};

FeatureSequence band_power_12(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence cqt_chroma_12(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence chroma_cens_12(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence mel_spectrogram_128(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence spectral_contrast_7(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence poly_coeffs_2(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence tonnetz_6(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence tempogram_384(std::span<const double> audio, const AcousticOptions& opt = {});
FeatureSequence pitch_track_1(std::span<const double> audio, const AcousticOptions& opt = {});

struct SpectralScalars {
  FeatureSequence rms, centroid, bandwidth, flatness, rolloff, zcr, loudness;
};
SpectralScalars spectral_scalars(std::span<const double> audio, const AcousticOptions& opt = {});

/// All 16 kinds on the shared 31 Hz grid, truncated to a common frame count.
AcousticSet extract_acoustic_set(std::span<const double> audio, const AcousticOptions& opt = {});

// Building blocks, exposed for testing.

/// Semitone-resolution constant-Q magnitudes C1..B7 (frames x 84).
RowMatrix cqt_magnitudes(std::span<const double> audio, const AcousticOptions& opt = {});
/// Sum of 84 semitone magnitudes into pitch classes (C = 0).
RowMatrix fold_chroma(const RowMatrix& cqt);
/// L1-normalize, quantize (0.4/0.2/0.1/0.05), smooth over `smoothing` frames, L2-normalize.
RowMatrix cens_from_chroma(const RowMatrix& chroma, int smoothing);
/// 6 x 12 tonal-centroid projection applied to L1-normalized chroma rows.
RowMatrix tonnetz_from_chroma(const RowMatrix& chroma);
/// Least-squares line (slope, intercept) through each frame's power vs bin frequency.
RowMatrix poly_from_power(const dsp::PowerSpectrogram& spec);
/// Half-wave rectified frame-to-frame increase of the dB mel spectrum, averaged over bands.
std::vector<double> onset_strength(const RowMatrix& mel_power);
/// Gaussian low-pass of an onset envelope (truncated at 4 sigma, renormalized at the edges).
/// A beat period that is not a whole number of frames otherwise splits its autocorrelation
/// peak across two lags while twice the period lands on one.
std::vector<double> smooth_onset(std::span<const double> onset, double sigma_frames);
/// Hann-windowed local autocorrelation of an onset envelope, normalized by lag 0.
RowMatrix tempogram_from_onset(std::span<const double> onset, int window);
/// HTK-mel triangular filters with unit peak (n_mels x bins).
RowMatrix mel_filterbank(int n_mels, int fft_size, double fs_hz, double fmax_hz);

}  // namespace eeg2speech::acoustic
