#include "eeg2speech/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace eeg2speech::dsp {

using cplx = std::complex<double>;

cplx Biquad::response(cplx z_inv) const {
  const cplx num = b0 + z_inv * (b1 + z_inv * b2);
  const cplx den = 1.0 + z_inv * (a1 + z_inv * a2);
  return num / den;
}

bool Biquad::stable() const {
  // Roots of z^2 + a1 z + a2.
  const cplx disc = std::sqrt(cplx(a1 * a1 - 4.0 * a2, 0.0));
  const cplx r1 = (-a1 + disc) / 2.0;
  const cplx r2 = (-a1 - disc) / 2.0;
  return std::isfinite(b0) && std::isfinite(b1) && std::isfinite(b2) && std::isfinite(a1) &&
         std::isfinite(a2) && std::abs(r1) < 1.0 && std::abs(r2) < 1.0;
}

cplx IirFilter::response(double freq_hz, double fs_hz) const {
  const cplx z_inv = std::polar(1.0, -2.0 * kPi * freq_hz / fs_hz);
  cplx h = 1.0;
  for (const auto& s : sections) h *= s.response(z_inv);
  return h;
}

double IirFilter::gain_db(double freq_hz, double fs_hz) const {
  return 20.0 * std::log10(std::abs(response(freq_hz, fs_hz)));
}

bool IirFilter::stable() const {
  return std::all_of(sections.begin(), sections.end(), [](const Biquad& s) { return s.stable(); });
}

namespace {

std::vector<Biquad> poles_to_sections(std::vector<cplx> poles) {
  std::vector<Biquad> out;
  std::vector<double> reals;
  for (const cplx& p : poles) {
    if (std::abs(p.imag()) <= 1e-12 * std::max(1.0, std::abs(p))) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      Biquad s;
      s.a1 = -2.0 * p.real();
      s.a2 = std::norm(p);
      out.push_back(s);
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Biquad s;
    s.a1 = -(reals[i] + reals[i + 1]);
    s.a2 = reals[i] * reals[i + 1];
    out.push_back(s);
  }
  if (reals.size() % 2 == 1) {
    Biquad s;
    s.a1 = -reals.back();
    out.push_back(s);
  }
  return out;
}

}  // namespace

IirFilter design_butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz) {
  if (order < 1) throw ConfigError("butterworth: order must be >= 1");
  if (!(fs_hz > 0.0) || !(lo_hz > 0.0) || !(lo_hz < hi_hz) || !(hi_hz < fs_hz / 2.0)) {
    throw ConfigError("butterworth: invalid band edges (need 0 < lo < hi < fs/2)");
  }
  const double fs2 = 2.0 * fs_hz;
  const double w1 = fs2 * std::tan(kPi * lo_hz / fs_hz);
  const double w2 = fs2 * std::tan(kPi * hi_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  // Analog band-pass poles from the low-pass prototype, then bilinear map.
  std::vector<cplx> digital_poles;
  cplx gain_den = 1.0;
  for (int k = 0; k < order; ++k) {
    const cplx p = -std::exp(cplx(0.0, kPi * (2 * k - order + 1) / (2.0 * order)));
    const cplx p_lp = p * bw / 2.0;
    const cplx root = std::sqrt(p_lp * p_lp - w0 * w0);
    for (const cplx p_bp : {p_lp + root, p_lp - root}) {
      digital_poles.push_back((fs2 + p_bp) / (fs2 - p_bp));
      gain_den *= (fs2 - p_bp);
    }
  }
  // `order` zeros at s = 0 map to z = 1; the remaining `order` go to z = -1.
  const double gain = (std::pow(bw, order) * std::pow(fs2, order) / gain_den).real();

  IirFilter f;
  f.sections = poles_to_sections(std::move(digital_poles));
  for (auto& s : f.sections) {
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
  }
  f.sections.front().b0 *= gain;
  f.sections.front().b1 *= gain;
  f.sections.front().b2 *= gain;

  std::ostringstream desc;
  desc << "butterworth band-pass: analog prototype order " << order << " (" << 2 * order
       << " digital poles), " << lo_hz << "-" << hi_hz << " Hz at fs " << fs_hz << " Hz";
  f.description = desc.str();
  return f;
}

IirFilter design_iir_notch(double f0_hz, double q, double fs_hz) {
  if (!(fs_hz > 0.0) || !(f0_hz > 0.0) || !(f0_hz < fs_hz / 2.0)) {
    throw ConfigError("notch: invalid center frequency (need 0 < f0 < fs/2)");
  }
  if (!(q > 0.0)) throw ConfigError("notch: q must be positive");
  const double w0 = 2.0 * kPi * f0_hz / fs_hz;
  const double beta = std::tan(w0 / q / 2.0);
  const double g = 1.0 / (1.0 + beta);
  Biquad s;
  s.b0 = g;
  s.b1 = -2.0 * g * std::cos(w0);
  s.b2 = g;
  s.a1 = -2.0 * g * std::cos(w0);
  s.a2 = 2.0 * g - 1.0;
  IirFilter f;
  f.sections = {s};
  std::ostringstream desc;
  desc << "notch " << f0_hz << " Hz, Q " << q << " at fs " << fs_hz << " Hz";
  f.description = desc.str();
  return f;
}

namespace {

struct SectionState {
  double z1 = 0.0, z2 = 0.0;
};

void run_cascade(const IirFilter& f, std::vector<SectionState>& state, std::vector<double>& x) {
  for (std::size_t k = 0; k < f.sections.size(); ++k) {
    const Biquad& s = f.sections[k];
    auto [z1, z2] = state[k];
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    state[k] = {z1, z2};
  }
}

// Steady-state internal state for a unit step, per section, scaled through the cascade.
std::vector<SectionState> step_state(const IirFilter& f) {
  std::vector<SectionState> zi;
  double scale = 1.0;
  for (const auto& s : f.sections) {
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * g;
    const double z1 = s.b1 - s.a1 * g + z2;
    zi.push_back({scale * z1, scale * z2});
    scale *= g;
  }
  return zi;
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Signal lfilter(const IirFilter& filter, std::span<const double> x) {
  Signal y(x.begin(), x.end());
  std::vector<SectionState> state(filter.sections.size());
  run_cascade(filter, state, y);
  return y;
}

Signal filtfilt(const IirFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = 3 * static_cast<std::size_t>(filter.order());
  if (n <= pad) throw DataError("filtfilt: signal too short for filter order");

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = step_state(filter);
  auto scaled = [&](double x0) {
    auto s = zi;
    for (auto& z : s) {
      z.z1 *= x0;
      z.z2 *= x0;
    }
    return s;
  };

  auto state = scaled(ext.front());
  run_cascade(filter, state, ext);
  std::reverse(ext.begin(), ext.end());
  state = scaled(ext.front());
  run_cascade(filter, state, ext);
  std::reverse(ext.begin(), ext.end());
  return Signal(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

Signal resample_poly(std::span<const double> x, int from_hz, int to_hz) {
  if (from_hz <= 0 || to_hz <= 0) throw ConfigError("resample_poly: rates must be positive");
  const int g = std::gcd(from_hz, to_hz);
  const long up = to_hz / g;
  const long down = from_hz / g;
  if (x.empty()) return {};
  if (up == 1 && down == 1) return Signal(x.begin(), x.end());

  const long max_rate = std::max(up, down);
  const long half_len = 10 * max_rate;
  const long taps = 2 * half_len + 1;
  const double cutoff = 1.0 / static_cast<double>(max_rate);  // fraction of Nyquist
  const double beta = 5.0;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (long i = 0; i < taps; ++i) {
    const double m = static_cast<double>(i - half_len);
    const double arg = cutoff * m;
    const double sinc = m == 0 ? 1.0 : std::sin(kPi * arg) / (kPi * arg);
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(taps - 1) - 1.0;
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                     std::cyl_bessel_i(0.0, beta);
    h[static_cast<std::size_t>(i)] = cutoff * sinc * w;
    sum += h[static_cast<std::size_t>(i)];
  }
  for (double& v : h) v *= static_cast<double>(up) / sum;

  const long n = static_cast<long>(x.size());
  const long out_len = (n * up + down / 2) / down;
  Signal y(static_cast<std::size_t>(out_len), 0.0);
  for (long m = 0; m < out_len; ++m) {
    // Position in the zero-stuffed upsampled domain, shifted by the filter delay.
    const long pos = m * down + half_len;
    const long j_hi = floor_div(pos, up);
    const long j_lo = floor_div(pos - (taps - 1) + up - 1, up);
    double acc = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) {
      const long src = std::clamp(j, 0L, n - 1);  // edge padding
      acc += h[static_cast<std::size_t>(pos - j * up)] * x[static_cast<std::size_t>(src)];
    }
    y[static_cast<std::size_t>(m)] = acc;
  }
  return y;
}

std::vector<double> hann_periodic(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

RowMatrix frame_centered(std::span<const double> x, int frame_len, int hop) {
  if (frame_len < 1 || hop < 1) throw ConfigError("frame_centered: frame_len and hop must be >= 1");
  const long n = static_cast<long>(x.size());
  if (n < frame_len || n < 2) throw DataError("signal shorter than one window");
  const long half = frame_len / 2;
  auto reflect = [n](long i) {
    const long period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
  };
  const int frames = centered_frame_count(x.size(), hop);
  RowMatrix out(frames, frame_len);
  for (int f = 0; f < frames; ++f) {
    const long start = static_cast<long>(f) * hop - half;
    for (int k = 0; k < frame_len; ++k) {
      out(f, k) = x[static_cast<std::size_t>(reflect(start + k))];
    }
  }
  return out;
}

PowerSpectrogram stft_power(std::span<const double> x, int fft_size, int hop, double fs_hz) {
  if (fft_size < 64 || (fft_size & (fft_size - 1)) != 0) {
    throw ConfigError("stft_power: fft_size must be a power of two >= 64");
  }
  if (hop < 1) throw ConfigError("stft_power: hop must be >= 1");
  const RowMatrix frames = frame_centered(x, fft_size, hop);
  const auto window = hann_periodic(fft_size);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  PowerSpectrogram spec;
  spec.fft_size = fft_size;
  spec.hop = hop;
  spec.sample_rate_hz = fs_hz;
  spec.power.resize(frames.rows(), fft_size / 2 + 1);
  std::vector<double> buf(static_cast<std::size_t>(fft_size));
  std::vector<cplx> out;
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    for (int k = 0; k < fft_size; ++k) buf[static_cast<std::size_t>(k)] = frames(f, k) * window[static_cast<std::size_t>(k)];
    fft.fwd(out, buf);
    for (int k = 0; k <= fft_size / 2; ++k) spec.power(f, k) = std::norm(out[static_cast<std::size_t>(k)]);
  }
  return spec;
}

std::vector<double> periodogram(std::span<const double> frame) {
  const std::size_t n = frame.size();
  if (n == 0) return {};
  std::vector<double> buf(frame.begin(), frame.end());
  std::vector<cplx> out;
  Eigen::FFT<double> fft;
  fft.fwd(out, buf);
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(out[k]);
  return p;
}

FrameGrid frame_grid_for_rate(int fs_hz, double target_rate_hz, int window_len) {
  if (!(target_rate_hz > 0.0)) throw ConfigError("frame grid: target rate must be positive");
  if (fs_hz < target_rate_hz) throw ConfigError("frame grid: sample rate below target frame rate");
  FrameGrid g;
  g.sample_rate_hz = fs_hz;
  g.target_rate_hz = target_rate_hz;
  g.hop = std::max(1, static_cast<int>(std::lround(fs_hz / target_rate_hz)));
  g.window_len = window_len > 0 ? window_len : g.hop;
  if (g.window_len < g.hop) throw ConfigError("frame grid: window_len must be >= hop");
  if (std::abs(g.effective_rate_hz() - target_rate_hz) >= 0.5) {
    throw ConfigError("frame grid: integer hop cannot realize the target rate within 0.5 Hz");
  }
  return g;
}

}  // namespace eeg2speech::dsp
