#pragma once

#include "eeg2speech/common.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace eeg2speech::dsp {

/// One second-order section, normalized so a0 = 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z_inv) const;
  /// Both poles strictly inside the unit circle.
  bool stable() const;
};

/// Cascade of second-order sections. Immutable after design.
struct IirFilter {
  std::vector<Biquad> sections;
  std::string description;

  int order() const { return 2 * static_cast<int>(sections.size()); }
  std::complex<double> response(double freq_hz, double fs_hz) const;
  double gain_db(double freq_hz, double fs_hz) const;
  bool stable() const;
};

/// Butterworth band-pass: `order`-th order analog low-pass prototype, band-transformed
/// (2*order digital poles) and mapped with the pre-warped bilinear transform.
IirFilter design_butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz);

/// Second-order notch at f0 with bandwidth f0/q.
IirFilter design_iir_notch(double f0_hz, double q, double fs_hz);

/// Causal single pass, zero initial state.
Signal lfilter(const IirFilter& filter, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd extension of 3*order samples and
/// steady-state initial conditions on each pass. Requires x.size() > 3*order.
Signal filtfilt(const IirFilter& filter, std::span<const double> x);

/// Polyphase rational resampling by to/from (reduced by gcd) with a Kaiser-windowed
/// sinc anti-aliasing filter. Output length is round(len * to / from).
Signal resample_poly(std::span<const double> x, int from_hz, int to_hz);

/// Periodic Hann window of length n.
std::vector<double> hann_periodic(int n);

/// Reflect-pad by n/2 on both sides and cut `1 + len/hop` frames of length n.
/// Row i is centered on sample i*hop. Requires len >= n.
RowMatrix frame_centered(std::span<const double> x, int frame_len, int hop);

/// Number of centered frames produced for a signal of `len` samples.
inline int centered_frame_count(std::size_t len, int hop) {
  return 1 + static_cast<int>(len / static_cast<std::size_t>(hop));
}

struct PowerSpectrogram {
  RowMatrix power;  // frames x (fft_size/2 + 1)
  int fft_size = 0;
  int hop = 0;
  double sample_rate_hz = 0.0;

  int frames() const { return static_cast<int>(power.rows()); }
  int bins() const { return static_cast<int>(power.cols()); }
  double bin_hz(int k) const { return k * sample_rate_hz / fft_size; }
};

/// |DFT|^2 of periodic-Hann-windowed, center-padded frames.
PowerSpectrogram stft_power(std::span<const double> x, int fft_size, int hop, double fs_hz);

/// One-sided periodogram |DFT|^2 of an arbitrary-length real frame (bins 0..n/2).
std::vector<double> periodogram(std::span<const double> frame);

struct FrameGrid {
  int sample_rate_hz = 0;
  int hop = 1;
  int window_len = 1;
  double target_rate_hz = 31.0;

  double effective_rate_hz() const { return static_cast<double>(sample_rate_hz) / hop; }
};

/// hop = round(fs/target); window_len = hop unless given.
FrameGrid frame_grid_for_rate(int fs_hz, double target_rate_hz = 31.0, int window_len = 0);

}  // namespace eeg2speech::dsp
