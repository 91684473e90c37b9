#include "eeg2speech/eeg_pipeline.hpp"

#include "eeg2speech/ica.hpp"

#include <cmath>

namespace eeg2speech::eeg {

void zscore_rows(RowMatrix& data) {
  const double n = static_cast<double>(data.cols());
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    auto row = data.row(c);
    const double mean = row.sum() / n;
    row.array() -= mean;
    const double sd = std::sqrt(row.squaredNorm() / n);
    if (sd < 1e-12) {
      row.setZero();
    } else {
      row /= sd;
    }
  }
}

CleanEeg preprocess_eeg(const dataio::EegRecording& rec, const PreprocessOptions& options) {
  if (rec.data.rows() != dataio::EegRecording::kChannels) {
    throw DataError("preprocess: expected 31 channels, got " + std::to_string(rec.data.rows()));
  }
  if (!rec.data.allFinite()) throw DataError("preprocess: NaN or infinite input");

  const double fs = rec.sample_rate_hz;
  const auto bandpass =
      dsp::design_butterworth_bandpass(options.bandpass_order, options.bandpass_lo_hz, options.bandpass_hi_hz, fs);
  const auto notch = dsp::design_iir_notch(options.notch_hz, options.notch_q, fs);

  CleanEeg out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.data.resize(rec.data.rows(), rec.data.cols());
  for (Eigen::Index c = 0; c < rec.data.rows(); ++c) {
    const auto row = rec.data.row(c);
    std::span<const double> x(row.data(), static_cast<std::size_t>(row.size()));
    Signal y = options.zero_phase ? dsp::filtfilt(bandpass, x) : dsp::lfilter(bandpass, x);
    y = options.zero_phase ? dsp::filtfilt(notch, y) : dsp::lfilter(notch, y);
    out.data.row(c) = Eigen::Map<const Eigen::RowVectorXd>(y.data(), row.size());
  }
  out.flags.bandpassed = true;
  out.flags.notched = true;

  if (options.ica) {
    const auto fit = ica::fast_ica(out.data, static_cast<int>(out.data.rows()), options.ica_seed,
                                   options.ica_max_iter, options.ica_tol);
    auto removal = ica::remove_artifact_components(fit, options.kurtosis_threshold);
    out.data = std::move(removal.cleaned);
    out.removed_components = std::move(removal.removed);
    out.ica_converged = fit.converged;
    out.flags.ica_cleaned = true;
  }
  if (options.zscore) {
    zscore_rows(out.data);
    out.flags.zscored = true;
  }
  return out;
}

FrameStats frame_stats(std::span<const double> frame) {
  const std::size_t n = frame.size();
  if (n < static_cast<std::size_t>(kMovingAverageLen)) throw DataError("frame_stats: frame shorter than 8 samples");
  FrameStats s;
  double sq = 0.0;
  for (double v : frame) sq += v * v;
  s.rms = std::sqrt(sq / static_cast<double>(n));

  int changes = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++changes;
  }
  s.zcr = static_cast<double>(changes) / static_cast<double>(n - 1);

  // Mean of the valid-mode 8-sample moving average.
  double window = 0.0;
  for (int i = 0; i < kMovingAverageLen; ++i) window += frame[static_cast<std::size_t>(i)];
  double total = window;
  for (std::size_t i = kMovingAverageLen; i < n; ++i) {
    window += frame[i] - frame[i - kMovingAverageLen];
    total += window;
  }
  s.mwa = total / kMovingAverageLen / static_cast<double>(n - kMovingAverageLen + 1);

  s.kurtosis = ica::excess_kurtosis(frame);

  const auto p = dsp::periodogram(frame);
  const std::size_t bins = n / 2;  // positive frequencies 1..n/2
  double psum = 0.0;
  for (std::size_t k = 1; k <= bins; ++k) psum += p[k];
  if (bins > 1 && psum > 1e-24) {
    double h = 0.0;
    for (std::size_t k = 1; k <= bins; ++k) {
      const double q = p[k] / psum;
      if (q > 0.0) h -= q * std::log(q);
    }
    s.pse = h / std::log(static_cast<double>(bins));
  }
  return s;
}

int stat_frame_count(Eigen::Index samples, const dsp::FrameGrid& grid) {
  if (samples < grid.window_len) return 0;
  return 1 + static_cast<int>((samples - grid.window_len) / grid.hop);
}

StatFeatureSeq extract_stat_features(const CleanEeg& clean, const dsp::FrameGrid& grid) {
  if (clean.data.rows() != dataio::EegRecording::kChannels) throw DataError("stat features: expected 31 channels");
  const int frames = stat_frame_count(clean.data.cols(), grid);
  if (frames < 1) throw DataError("stat features: recording shorter than one frame");
  StatFeatureSeq out;
  out.grid = grid;
  out.values.resize(frames, kStatFeatureDim);
  for (int f = 0; f < frames; ++f) {
    for (Eigen::Index c = 0; c < clean.data.rows(); ++c) {
      const double* start = clean.data.row(c).data() + static_cast<std::ptrdiff_t>(f) * grid.hop;
      const FrameStats s = frame_stats(std::span<const double>(start, static_cast<std::size_t>(grid.window_len)));
      const Eigen::Index col = c * kStatsPerChannel;
      out.values(f, col + 0) = s.rms;
      out.values(f, col + 1) = s.zcr;
      out.values(f, col + 2) = s.mwa;
      out.values(f, col + 3) = s.kurtosis;
      out.values(f, col + 4) = s.pse;
    }
  }
  return out;
}

}  // namespace eeg2speech::eeg
