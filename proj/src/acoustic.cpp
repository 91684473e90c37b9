#include "eeg2speech/acoustic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace eeg2speech::acoustic {

namespace {

constexpr std::array<const char*, 16> kNames = {
    "band_power", "cqt_chroma", "chroma_cens", "mel",     "rms",       "centroid", "bandwidth", "contrast",
    "flatness",   "rolloff",    "poly",        "tonnetz", "zcr",       "tempogram", "loudness", "pitch"};

constexpr double kFloor = 1e-10;
constexpr double kC1Hz = 32.703195662574829;
constexpr int kCqtBins = 84;  // C1..B7

FeatureSequence make_seq(FeatureKind kind, RowMatrix values, const AcousticOptions& opt) {
  if (values.cols() != feature_dim(kind)) throw std::logic_error("feature dimension mismatch for " + kind_name(kind));
  return {kind, std::move(values), opt.grid()};
}

std::vector<double> bin_freqs(int fft_size, double fs) {
  std::vector<double> f(static_cast<std::size_t>(fft_size / 2 + 1));
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * fs / fft_size;
  return f;
}

void check_clip(std::span<const double> audio, const AcousticOptions& opt) {
  if (audio.size() < static_cast<std::size_t>(opt.fft_size)) throw DataError("acoustic: clip shorter than one window");
}

dsp::PowerSpectrogram power_of(std::span<const double> audio, const AcousticOptions& opt) {
  check_clip(audio, opt);
  return dsp::stft_power(audio, opt.fft_size, opt.grid().hop, opt.sample_rate_hz);
}

// Intermediates shared by several kinds.
struct Analysis {
  dsp::PowerSpectrogram spec;
  RowMatrix frames;  // centered time-domain frames, frames x fft_size
  RowMatrix cqt;
  RowMatrix mel;
};

Analysis analyse(std::span<const double> audio, const AcousticOptions& opt, bool with_cqt) {
  Analysis a;
  a.spec = power_of(audio, opt);
  a.frames = dsp::frame_centered(audio, opt.fft_size, opt.grid().hop);
  if (with_cqt) a.cqt = cqt_magnitudes(audio, opt);
  a.mel = a.spec.power * mel_filterbank(128, opt.fft_size, opt.sample_rate_hz, opt.mel_fmax_hz).transpose();
  return a;
}

RowMatrix band_power_from(const dsp::PowerSpectrogram& spec, const AcousticOptions& opt) {
  constexpr int kBands = 12;
  const auto freqs = bin_freqs(spec.fft_size, spec.sample_rate_hz);
  std::array<double, kBands + 1> edges{};
  for (int i = 0; i <= kBands; ++i) {
    edges[static_cast<std::size_t>(i)] =
        opt.band_fmin_hz * std::pow(opt.band_fmax_hz / opt.band_fmin_hz, static_cast<double>(i) / kBands);
  }
  RowMatrix out = RowMatrix::Zero(spec.frames(), kBands);
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const double f = freqs[k];
    if (f < edges.front() || f > edges.back()) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), f);
    const int band = std::min(kBands - 1, static_cast<int>(it - edges.begin()) - 1);
    out.col(band) += spec.power.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

RowMatrix chroma_normalized(const RowMatrix& folded) {
  RowMatrix out = folded;
  for (Eigen::Index f = 0; f < out.rows(); ++f) {
    const double peak = out.row(f).maxCoeff();
    if (peak < 1e-12) {
      out.row(f).setZero();
    } else {
      out.row(f) /= peak;
    }
  }
  return out;
}

RowMatrix contrast_from(const dsp::PowerSpectrogram& spec, const AcousticOptions& opt) {
  constexpr int kBands = 7;
  const auto freqs = bin_freqs(spec.fft_size, spec.sample_rate_hz);
  std::array<double, kBands + 1> edges{};
  edges[0] = 0.0;
  for (int i = 1; i < kBands; ++i) edges[static_cast<std::size_t>(i)] = opt.contrast_fmin_hz * std::pow(2.0, i - 1);
  edges[kBands] = spec.sample_rate_hz / 2.0;
  RowMatrix out(spec.frames(), kBands);
  std::vector<double> band;
  for (int b = 0; b < kBands; ++b) {
    std::vector<Eigen::Index> bins;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      const bool last = b == kBands - 1;
      if (freqs[k] >= edges[static_cast<std::size_t>(b)] &&
          (freqs[k] < edges[static_cast<std::size_t>(b + 1)] || (last && freqs[k] <= edges[kBands]))) {
        bins.push_back(static_cast<Eigen::Index>(k));
      }
    }
    const auto n = static_cast<int>(bins.size());
    const int q = std::max(1, static_cast<int>(std::lround(opt.contrast_quantile * n)));
    for (int f = 0; f < spec.frames(); ++f) {
      band.clear();
      for (auto k : bins) band.push_back(spec.power(f, k));
      std::sort(band.begin(), band.end());
      const double valley = std::accumulate(band.begin(), band.begin() + q, 0.0) / q;
      const double peak = std::accumulate(band.end() - q, band.end(), 0.0) / q;
      out(f, b) = std::log(std::max(peak, kFloor)) - std::log(std::max(valley, kFloor));
    }
  }
  return out;
}

SpectralScalars scalars_from(const Analysis& a, const AcousticOptions& opt) {
  const auto freqs = bin_freqs(a.spec.fft_size, a.spec.sample_rate_hz);
  const int frames = a.spec.frames();
  RowMatrix rms(frames, 1), centroid(frames, 1), bandwidth(frames, 1), flatness(frames, 1), rolloff(frames, 1),
      zcr(frames, 1), loudness(frames, 1);
  const auto bins = static_cast<Eigen::Index>(freqs.size());
  for (int f = 0; f < frames; ++f) {
    const auto x = a.frames.row(f);
    const double r = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
    rms(f, 0) = r;
    loudness(f, 0) = 20.0 * std::log10(r + 1e-6);
    int changes = 0;
    for (Eigen::Index i = 1; i < x.size(); ++i) {
      if ((x(i - 1) >= 0.0) != (x(i) >= 0.0)) ++changes;
    }
    zcr(f, 0) = static_cast<double>(changes) / static_cast<double>(x.size() - 1);

    const auto p = a.spec.power.row(f);
    const double total = p.sum();
    double c = 0.0, bw = 0.0;
    if (total > 0.0) {
      for (Eigen::Index k = 0; k < bins; ++k) c += freqs[static_cast<std::size_t>(k)] * p(k);
      c /= total;
      for (Eigen::Index k = 0; k < bins; ++k) {
        const double d = freqs[static_cast<std::size_t>(k)] - c;
        bw += d * d * p(k);
      }
      bw = std::sqrt(bw / total);
    }
    centroid(f, 0) = c;
    bandwidth(f, 0) = bw;

    double log_sum = 0.0, lin_sum = 0.0;
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double v = std::max(p(k), kFloor);
      log_sum += std::log(v);
      lin_sum += v;
    }
    flatness(f, 0) = std::exp(log_sum / static_cast<double>(bins)) / (lin_sum / static_cast<double>(bins));

    const double threshold = opt.rolloff_fraction * total;
    double acc = 0.0;
    double roll = freqs.back();
    for (Eigen::Index k = 0; k < bins; ++k) {
      acc += p(k);
      if (acc >= threshold) {
        roll = freqs[static_cast<std::size_t>(k)];
        break;
      }
    }
    rolloff(f, 0) = roll;
  }
  return {make_seq(FeatureKind::Rms, std::move(rms), opt),
          make_seq(FeatureKind::Centroid, std::move(centroid), opt),
          make_seq(FeatureKind::Bandwidth, std::move(bandwidth), opt),
          make_seq(FeatureKind::Flatness, std::move(flatness), opt),
          make_seq(FeatureKind::Rolloff, std::move(rolloff), opt),
          make_seq(FeatureKind::Zcr, std::move(zcr), opt),
          make_seq(FeatureKind::Loudness, std::move(loudness), opt)};
}

RowMatrix pitch_from(const RowMatrix& frames, const AcousticOptions& opt) {
  const double fs = opt.sample_rate_hz;
  const auto n = frames.cols();
  const auto lag_min = static_cast<Eigen::Index>(std::floor(fs / opt.pitch_fmax_hz));
  const auto lag_max = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(fs / opt.pitch_fmin_hz)), n - 2);
  RowMatrix out = RowMatrix::Zero(frames.rows(), 1);
  Eigen::RowVectorXd x(n);
  std::vector<double> r(static_cast<std::size_t>(lag_max + 2));
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    x = frames.row(f);
    x.array() -= x.mean();
    const double r0 = x.squaredNorm();
    if (r0 <= 1e-12) continue;
    for (Eigen::Index lag = std::max<Eigen::Index>(lag_min - 1, 0); lag <= lag_max + 1; ++lag) {
      r[static_cast<std::size_t>(lag)] = x.head(n - lag).dot(x.tail(n - lag)) / r0;
    }
    Eigen::Index best = -1;
    for (Eigen::Index lag = std::max<Eigen::Index>(lag_min, 1); lag <= lag_max; ++lag) {
      const double v = r[static_cast<std::size_t>(lag)];
      if (v >= r[static_cast<std::size_t>(lag - 1)] && v >= r[static_cast<std::size_t>(lag + 1)] &&
          (best < 0 || v > r[static_cast<std::size_t>(best)])) {
        best = lag;
      }
    }
    if (best < 0 || r[static_cast<std::size_t>(best)] < opt.pitch_clarity) continue;
    const double a = r[static_cast<std::size_t>(best - 1)];
    const double b = r[static_cast<std::size_t>(best)];
    const double c = r[static_cast<std::size_t>(best + 1)];
    const double denom = a - 2.0 * b + c;
    const double shift = std::abs(denom) > 1e-15 ? 0.5 * (a - c) / denom : 0.0;
    out(f, 0) = fs / (static_cast<double>(best) + std::clamp(shift, -0.5, 0.5));
  }
  return out;
}

}  // namespace

std::string kind_name(FeatureKind k) { return kNames[static_cast<std::size_t>(k)]; }

std::string kind_label(FeatureKind k) { return "f" + std::to_string(kind_index(k) + 1); }

FeatureKind parse_kind(const std::string& s) {
  for (FeatureKind k : kAllKinds) {
    if (s == kind_label(k) || s == kind_name(k)) return k;
  }
  throw ConfigError("unknown feature kind '" + s + "' (expected f1..f16 or a kind name)");
}

dsp::FrameGrid AcousticOptions::grid() const {
  return dsp::frame_grid_for_rate(sample_rate_hz, frame_rate_hz, fft_size);
}

RowMatrix AcousticSet::concatenated() const {
  RowMatrix out(frames(), kTotalDim);
  Eigen::Index col = 0;
  for (const auto& s : sequences) {
    out.middleCols(col, s.values.cols()) = s.values.topRows(frames());
    col += s.values.cols();
  }
  return out;
}

RowMatrix mel_filterbank(int n_mels, int fft_size, double fs_hz, double fmax_hz) {
  auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double mel_max = hz_to_mel(fmax_hz);
  std::vector<double> pts(static_cast<std::size_t>(n_mels + 2));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  const auto freqs = bin_freqs(fft_size, fs_hz);
  RowMatrix w = RowMatrix::Zero(n_mels, static_cast<Eigen::Index>(freqs.size()));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = pts[static_cast<std::size_t>(m)];
    const double c = pts[static_cast<std::size_t>(m + 1)];
    const double hi = pts[static_cast<std::size_t>(m + 2)];
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      const double f = freqs[k];
      const double v = std::min((f - lo) / (c - lo), (hi - f) / (hi - c));
      if (v > 0.0) w(m, static_cast<Eigen::Index>(k)) = v;
    }
  }
  return w;
}

RowMatrix cqt_magnitudes(std::span<const double> audio, const AcousticOptions& opt) {
  check_clip(audio, opt);
  const auto grid = opt.grid();
  const double fs = opt.sample_rate_hz;
  const double q = 1.0 / (std::pow(2.0, 1.0 / 12.0) - 1.0);
  const int frames = dsp::centered_frame_count(audio.size(), grid.hop);
  const auto len = static_cast<long>(audio.size());
  RowMatrix out = RowMatrix::Zero(frames, kCqtBins);
  for (int b = 0; b < kCqtBins; ++b) {
    const double freq = kC1Hz * std::pow(2.0, b / 12.0);
    if (freq >= fs / 2.0) continue;
    const long n = static_cast<long>(std::ceil(q * fs / freq));
    std::vector<std::complex<double>> kernel(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
      kernel[static_cast<std::size_t>(i)] =
          std::polar(w / static_cast<double>(n), -2.0 * kPi * freq * static_cast<double>(i) / fs);
    }
    for (int f = 0; f < frames; ++f) {
      const long start = static_cast<long>(f) * grid.hop - n / 2;
      const long i0 = std::max(0L, -start);
      const long i1 = std::min(n, len - start);
      std::complex<double> acc = 0.0;
      for (long i = i0; i < i1; ++i) acc += kernel[static_cast<std::size_t>(i)] * audio[static_cast<std::size_t>(start + i)];
      out(f, b) = std::abs(acc);
    }
  }
  return out;
}

RowMatrix fold_chroma(const RowMatrix& cqt) {
  RowMatrix out = RowMatrix::Zero(cqt.rows(), 12);
  for (Eigen::Index b = 0; b < cqt.cols(); ++b) out.col(b % 12) += cqt.col(b);
  return out;
}

RowMatrix cens_from_chroma(const RowMatrix& chroma, int smoothing) {
  if (smoothing < 1) throw ConfigError("cens: smoothing must be >= 1");
  const Eigen::Index frames = chroma.rows();
  RowMatrix quant = RowMatrix::Zero(frames, 12);
  constexpr std::array<double, 4> kSteps = {0.4, 0.2, 0.1, 0.05};
  for (Eigen::Index f = 0; f < frames; ++f) {
    const double l1 = chroma.row(f).cwiseAbs().sum();
    if (l1 < 1e-12) continue;
    for (int c = 0; c < 12; ++c) {
      const double v = std::abs(chroma(f, c)) / l1;
      for (double step : kSteps) {
        if (v > step) quant(f, c) += 0.25;
      }
    }
  }
  // Hann smoothing window (interior of a length smoothing+2 window), unit sum.
  std::vector<double> win(static_cast<std::size_t>(smoothing));
  for (int i = 0; i < smoothing; ++i) {
    win[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * (i + 1) / (smoothing + 1));
  }
  const double wsum = std::accumulate(win.begin(), win.end(), 0.0);
  for (double& v : win) v /= wsum;
  const int half = smoothing / 2;
  RowMatrix smooth = RowMatrix::Zero(frames, 12);
  for (Eigen::Index f = 0; f < frames; ++f) {
    for (int i = 0; i < smoothing; ++i) {
      const Eigen::Index src = f + i - half;
      if (src < 0 || src >= frames) continue;
      smooth.row(f) += win[static_cast<std::size_t>(i)] * quant.row(src);
    }
  }
  for (Eigen::Index f = 0; f < frames; ++f) {
    const double norm = smooth.row(f).norm();
    if (norm < 1e-12) {
      smooth.row(f).setZero();
    } else {
      smooth.row(f) /= norm;
    }
  }
  return smooth;
}

RowMatrix tonnetz_from_chroma(const RowMatrix& chroma) {
  Eigen::Matrix<double, 6, 12> phi;
  constexpr std::array<double, 3> kRadii = {1.0, 1.0, 0.5};
  constexpr std::array<double, 3> kAngles = {7.0 * kPi / 6.0, 3.0 * kPi / 2.0, 2.0 * kPi / 3.0};
  for (int k = 0; k < 12; ++k) {
    for (int i = 0; i < 3; ++i) {
      phi(2 * i, k) = kRadii[static_cast<std::size_t>(i)] * std::sin(k * kAngles[static_cast<std::size_t>(i)]);
      phi(2 * i + 1, k) = kRadii[static_cast<std::size_t>(i)] * std::cos(k * kAngles[static_cast<std::size_t>(i)]);
    }
  }
  RowMatrix out = RowMatrix::Zero(chroma.rows(), 6);
  for (Eigen::Index f = 0; f < chroma.rows(); ++f) {
    const double l1 = chroma.row(f).cwiseAbs().sum();
    if (l1 < 1e-12) continue;
    out.row(f) = (phi * (chroma.row(f).transpose() / l1)).transpose();
  }
  return out;
}

RowMatrix poly_from_power(const dsp::PowerSpectrogram& spec) {
  const auto freqs = bin_freqs(spec.fft_size, spec.sample_rate_hz);
  const auto n = static_cast<double>(freqs.size());
  const double f_mean = std::accumulate(freqs.begin(), freqs.end(), 0.0) / n;
  double sxx = 0.0;
  for (double f : freqs) sxx += (f - f_mean) * (f - f_mean);
  RowMatrix out(spec.frames(), 2);
  for (int fr = 0; fr < spec.frames(); ++fr) {
    const auto p = spec.power.row(fr);
    const double p_mean = p.mean();
    double sxy = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) sxy += (freqs[static_cast<std::size_t>(k)] - f_mean) * (p(k) - p_mean);
    const double slope = sxy / sxx;
    out(fr, 0) = slope;
    out(fr, 1) = p_mean - slope * f_mean;
  }
  return out;
}

std::vector<double> onset_strength(const RowMatrix& mel_power) {
  const Eigen::Index frames = mel_power.rows();
  RowMatrix db = mel_power.unaryExpr([](double v) { return 10.0 * std::log10(std::max(v, kFloor)); });
  const double top = frames > 0 ? db.maxCoeff() : 0.0;
  db = db.cwiseMax(top - 80.0);
  std::vector<double> onset(static_cast<std::size_t>(frames), 0.0);
  for (Eigen::Index f = 1; f < frames; ++f) {
    onset[static_cast<std::size_t>(f)] = (db.row(f) - db.row(f - 1)).cwiseMax(0.0).mean();
  }
  return onset;
}

std::vector<double> smooth_onset(std::span<const double> onset, double sigma_frames) {
  if (sigma_frames < 0.0) throw ConfigError("onset smoothing must be >= 0");
  std::vector<double> out(onset.begin(), onset.end());
  if (sigma_frames == 0.0) return out;
  const long radius = static_cast<long>(std::ceil(4.0 * sigma_frames));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (long i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma_frames * sigma_frames));
  }
  const auto n = static_cast<long>(onset.size());
  for (long f = 0; f < n; ++f) {
    double acc = 0.0, wsum = 0.0;
    for (long i = std::max(-radius, -f); i <= std::min(radius, n - 1 - f); ++i) {
      const double w = kernel[static_cast<std::size_t>(i + radius)];
      acc += w * onset[static_cast<std::size_t>(f + i)];
      wsum += w;
    }
    out[static_cast<std::size_t>(f)] = acc / wsum;
  }
  return out;
}

RowMatrix tempogram_from_onset(std::span<const double> onset, int window) {
  if (window < 1) throw ConfigError("tempogram: window must be >= 1");
  const auto frames = static_cast<long>(onset.size());
  const auto win = dsp::hann_periodic(window);
  const long half = window / 2;
  RowMatrix out = RowMatrix::Zero(frames, window);
  std::vector<double> seg(static_cast<std::size_t>(window));
  for (long f = 0; f < frames; ++f) {
    for (long i = 0; i < window; ++i) {
      const long src = f - half + i;
      seg[static_cast<std::size_t>(i)] =
          (src >= 0 && src < frames) ? onset[static_cast<std::size_t>(src)] * win[static_cast<std::size_t>(i)] : 0.0;
    }
    for (long lag = 0; lag < window; ++lag) {
      double acc = 0.0;
      for (long i = 0; i + lag < window; ++i) acc += seg[static_cast<std::size_t>(i)] * seg[static_cast<std::size_t>(i + lag)];
      out(f, lag) = acc;
    }
    const double lag0 = out(f, 0);
    if (lag0 > 1e-12) {
      out.row(f) /= lag0;
    } else {
      out.row(f).setZero();
    }
  }
  return out;
}

FeatureSequence band_power_12(std::span<const double> audio, const AcousticOptions& opt) {
  return make_seq(FeatureKind::BandPower, band_power_from(power_of(audio, opt), opt), opt);
}

FeatureSequence cqt_chroma_12(std::span<const double> audio, const AcousticOptions& opt) {
  return make_seq(FeatureKind::CqtChroma, chroma_normalized(fold_chroma(cqt_magnitudes(audio, opt))), opt);
}

FeatureSequence chroma_cens_12(std::span<const double> audio, const AcousticOptions& opt) {
  return make_seq(FeatureKind::ChromaCens, cens_from_chroma(fold_chroma(cqt_magnitudes(audio, opt)), opt.cens_smoothing),
                  opt);
}

FeatureSequence mel_spectrogram_128(std::span<const double> audio, const AcousticOptions& opt) {
  const auto spec = power_of(audio, opt);
  return make_seq(FeatureKind::Mel,
                  spec.power * mel_filterbank(128, opt.fft_size, opt.sample_rate_hz, opt.mel_fmax_hz).transpose(), opt);
}

SpectralScalars spectral_scalars(std::span<const double> audio, const AcousticOptions& opt) {
  return scalars_from(analyse(audio, opt, false), opt);
}

FeatureSequence spectral_contrast_7(std::span<const double> audio, const AcousticOptions& opt) {
  return make_seq(FeatureKind::Contrast, contrast_from(power_of(audio, opt), opt), opt);
}

FeatureSequence poly_coeffs_2(std::span<const double> audio, const AcousticOptions& opt) {
  return make_seq(FeatureKind::Poly, poly_from_power(power_of(audio, opt)), opt);
}

FeatureSequence tonnetz_6(std::span<const double> audio, const AcousticOptions& opt) {
  const auto cens = cens_from_chroma(fold_chroma(cqt_magnitudes(audio, opt)), opt.cens_smoothing);
  return make_seq(FeatureKind::Tonnetz, tonnetz_from_chroma(cens), opt);
}

FeatureSequence tempogram_384(std::span<const double> audio, const AcousticOptions& opt) {
  const auto mel = mel_spectrogram_128(audio, opt);
  return make_seq(FeatureKind::Tempogram, tempogram_from_onset(smooth_onset(onset_strength(mel.values), opt.onset_smoothing_frames), opt.tempogram_window), opt);
}

FeatureSequence pitch_track_1(std::span<const double> audio, const AcousticOptions& opt) {
  check_clip(audio, opt);
  return make_seq(FeatureKind::Pitch, pitch_from(dsp::frame_centered(audio, opt.fft_size, opt.grid().hop), opt), opt);
}

AcousticSet extract_acoustic_set(std::span<const double> audio, const AcousticOptions& opt) {
  if (opt.tempogram_window != feature_dim(FeatureKind::Tempogram)) {
    throw ConfigError("acoustic: tempogram window must equal its 384-lag dimension");
  }
  const Analysis a = analyse(audio, opt, true);
  const RowMatrix chroma = fold_chroma(a.cqt);
  const RowMatrix cens = cens_from_chroma(chroma, opt.cens_smoothing);
  SpectralScalars s = scalars_from(a, opt);

  AcousticSet set;
  set.sequences.push_back(make_seq(FeatureKind::BandPower, band_power_from(a.spec, opt), opt));
  set.sequences.push_back(make_seq(FeatureKind::CqtChroma, chroma_normalized(chroma), opt));
  set.sequences.push_back(make_seq(FeatureKind::ChromaCens, cens, opt));
  set.sequences.push_back(make_seq(FeatureKind::Mel, a.mel, opt));
  set.sequences.push_back(std::move(s.rms));
  set.sequences.push_back(std::move(s.centroid));
  set.sequences.push_back(std::move(s.bandwidth));
  set.sequences.push_back(make_seq(FeatureKind::Contrast, contrast_from(a.spec, opt), opt));
  set.sequences.push_back(std::move(s.flatness));
  set.sequences.push_back(std::move(s.rolloff));
  set.sequences.push_back(make_seq(FeatureKind::Poly, poly_from_power(a.spec), opt));
  set.sequences.push_back(make_seq(FeatureKind::Tonnetz, tonnetz_from_chroma(cens), opt));
  set.sequences.push_back(std::move(s.zcr));
  set.sequences.push_back(
      make_seq(FeatureKind::Tempogram, tempogram_from_onset(smooth_onset(onset_strength(a.mel), opt.onset_smoothing_frames), opt.tempogram_window), opt));
  set.sequences.push_back(std::move(s.loudness));
  set.sequences.push_back(make_seq(FeatureKind::Pitch, pitch_from(a.frames, opt), opt));

  int common = set.sequences.front().frames();
  for (const auto& seq : set.sequences) common = std::min(common, seq.frames());
  for (auto& seq : set.sequences) seq.values.conservativeResize(common, Eigen::NoChange);
  return set;
}

}  // namespace eeg2speech::acoustic
