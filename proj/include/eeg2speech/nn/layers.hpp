#pragma once

#include "eeg2speech/nn/tensor.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace eeg2speech::nn {

/// A differentiable sequence layer. `backward` must follow the matching `forward`;
/// it accumulates into each Param::grad and returns the gradient w.r.t. the input.
template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual SeqBatch<S> forward(const SeqBatch<S>& x, bool training) = 0;
  virtual SeqBatch<S> backward(const SeqBatch<S>& grad_out) = 0;
  virtual std::vector<Param<S>*> params() { return {}; }
  virtual std::string name() const = 0;
};

namespace detail {

inline void check_features(Eigen::Index got, Eigen::Index want, const char* layer) {
  if (got != want) {
    throw DataError(std::string(layer) + ": expected " + std::to_string(want) + " input features, got " +
                    std::to_string(got));
  }
}

template <typename S>
void init_uniform(Mat<S>& m, double limit, std::mt19937_64& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>((2.0 * uniform01(rng) - 1.0) * limit);
}

}  // namespace detail

/// Time-distributed affine map with linear activation: y_t = x_t W + b.
template <typename S>
class Dense final : public Layer<S> {
 public:
  Dense(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng)
      : w_("dense.W", in, out), b_("dense.b", 1, out) {
    detail::init_uniform(w_.value, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  }

  SeqBatch<S> forward(const SeqBatch<S>& x, bool) override {
    detail::check_features(x.features, w_.value.rows(), "dense");
    x_ = x;
    SeqBatch<S> y(x.batch, x.time, w_.value.cols());
    y.lengths = x.lengths;
    y.data.noalias() = x.data * w_.value;
    y.data.rowwise() += b_.value.row(0);
    return y;
  }

  SeqBatch<S> backward(const SeqBatch<S>& g) override {
    w_.grad.noalias() += x_.data.transpose() * g.data;
    b_.grad += g.data.colwise().sum();
    SeqBatch<S> dx = x_.zeros_like();
    dx.data.noalias() = g.data * w_.value.transpose();
    return dx;
  }

  std::vector<Param<S>*> params() override { return {&w_, &b_}; }
  std::string name() const override { return "dense"; }

  Param<S>& weight() { return w_; }
  Param<S>& bias() { return b_; }

 private:
  Param<S> w_, b_;
  SeqBatch<S> x_;
};

enum class UpsampleMode { Nearest, Linear };

/// Repeats each time step `factor` times (nearest) or interpolates linearly
/// between neighbouring steps at half-sample offsets (linear).
template <typename S>
class Upsample final : public Layer<S> {
 public:
  explicit Upsample(int factor, UpsampleMode mode = UpsampleMode::Nearest) : factor_(factor), mode_(mode) {
    if (factor < 1) throw ConfigError("upsample: factor must be >= 1");
  }

  SeqBatch<S> forward(const SeqBatch<S>& x, bool) override {
    in_ = x.zeros_like();
    SeqBatch<S> y(x.batch, x.time * factor_, x.features);
    for (std::size_t b = 0; b < x.lengths.size(); ++b) y.lengths[b] = x.lengths[b] * factor_;
    for (Eigen::Index b = 0; b < x.batch; ++b) {
      const auto src = x.seq(b);
      auto dst = y.seq(b);
      for (Eigen::Index i = 0; i < y.time; ++i) {
        const auto [lo, hi, frac] = taps(i, x.time);
        if (hi == lo) {
          dst.row(i) = src.row(lo);
        } else {
          dst.row(i) = static_cast<S>(1.0 - frac) * src.row(lo) + static_cast<S>(frac) * src.row(hi);
        }
      }
    }
    return y;
  }

  SeqBatch<S> backward(const SeqBatch<S>& g) override {
    SeqBatch<S> dx = in_;
    dx.data.setZero();
    for (Eigen::Index b = 0; b < dx.batch; ++b) {
      const auto src = g.seq(b);
      auto dst = dx.seq(b);
      for (Eigen::Index i = 0; i < g.time; ++i) {
        const auto [lo, hi, frac] = taps(i, dx.time);
        if (hi == lo) {
          dst.row(lo) += src.row(i);
        } else {
          dst.row(lo) += static_cast<S>(1.0 - frac) * src.row(i);
          dst.row(hi) += static_cast<S>(frac) * src.row(i);
        }
      }
    }
    return dx;
  }

  std::string name() const override { return "upsample"; }
  int factor() const { return factor_; }

 private:
  struct Taps {
    Eigen::Index lo, hi;
    double frac;
  };

  Taps taps(Eigen::Index i, Eigen::Index t_in) const {
    if (mode_ == UpsampleMode::Nearest) return {i / factor_, i / factor_, 0.0};
    const double pos = (static_cast<double>(i) + 0.5) / factor_ - 0.5;
    if (pos <= 0.0) return {0, 0, 0.0};
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    if (lo >= t_in - 1) return {t_in - 1, t_in - 1, 0.0};
    return {lo, lo + 1, pos - static_cast<double>(lo)};
  }

  int factor_;
  UpsampleMode mode_;
  SeqBatch<S> in_;
};

/// Inverted dropout: in training, zero with probability `rate` and scale survivors
/// by 1/(1-rate); identity at inference.
template <typename S>
class Dropout final : public Layer<S> {
 public:
  Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
  }

  SeqBatch<S> forward(const SeqBatch<S>& x, bool training) override {
    active_ = training && rate_ > 0.0;
    if (!active_) return x;
    const S keep_scale = static_cast<S>(1.0 / (1.0 - rate_));
    mask_.resize(x.data.rows(), x.data.cols());
    for (Eigen::Index i = 0; i < mask_.size(); ++i) {
      mask_.data()[i] = uniform01(rng_) < rate_ ? S(0) : keep_scale;
    }
    SeqBatch<S> y = x;
    y.data.array() *= mask_.array();
    return y;
  }

  SeqBatch<S> backward(const SeqBatch<S>& g) override {
    if (!active_) return g;
    SeqBatch<S> dx = g;
    dx.data.array() *= mask_.array();
    return dx;
  }

  std::string name() const override { return "dropout"; }
  double rate() const { return rate_; }
  void set_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
    rate_ = rate;
  }

 private:
  double rate_;
  std::mt19937_64 rng_;
  bool active_ = false;
  Mat<S> mask_;
};

struct TcnOptions {
  int kernel_size = 3;
  int dilation = 1;
  bool residual = true;
};

/// One residual TCN block: y = ReLU(causal dilated conv(x)) + skip(x), where skip is
/// the identity when widths match and a learned 1x1 projection otherwise.
/// Tap j of the kernel reads x[t - (kernel_size - 1 - j) * dilation].
template <typename S>
class TcnBlock final : public Layer<S> {
 public:
  TcnBlock(Eigen::Index in, Eigen::Index out, const TcnOptions& opt, std::mt19937_64& rng, const std::string& prefix)
      : in_(in), out_(out), opt_(opt), w_(prefix + ".W", opt.kernel_size * in, out), b_(prefix + ".b", 1, out) {
    if (opt.kernel_size < 1 || opt.dilation < 1) throw ConfigError("tcn: kernel_size and dilation must be >= 1");
    detail::init_uniform(w_.value, 1.0 / std::sqrt(static_cast<double>(opt.kernel_size * in)), rng);
    if (opt.residual && in != out) {
      proj_w_ = Param<S>(prefix + ".proj_W", in, out);
      proj_b_ = Param<S>(prefix + ".proj_b", 1, out);
      detail::init_uniform(proj_w_.value, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    }
  }

  SeqBatch<S> forward(const SeqBatch<S>& x, bool) override {
    detail::check_features(x.features, in_, "tcn");
    x_ = x;
    z_ = SeqBatch<S>(x.batch, x.time, out_);
    z_.lengths = x.lengths;
    const Eigen::Index t = x.time;
    for (Eigen::Index b = 0; b < x.batch; ++b) {
      const auto xs = x.seq(b);
      auto zs = z_.seq(b);
      zs.rowwise() = b_.value.row(0);
      for (int j = 0; j < opt_.kernel_size; ++j) {
        const Eigen::Index shift = static_cast<Eigen::Index>(opt_.kernel_size - 1 - j) * opt_.dilation;
        if (shift >= t) continue;
        zs.bottomRows(t - shift).noalias() += xs.topRows(t - shift) * w_.value.middleRows(j * in_, in_);
      }
    }
    SeqBatch<S> y = z_;
    y.data = z_.data.cwiseMax(S(0));
    if (opt_.residual) {
      if (has_projection()) {
        y.data.noalias() += x.data * proj_w_.value;
        y.data.rowwise() += proj_b_.value.row(0);
      } else {
        y.data += x.data;
      }
    }
    return y;
  }

  SeqBatch<S> backward(const SeqBatch<S>& g) override {
    const Eigen::Index t = x_.time;
    Mat<S> dz = (z_.data.array() > S(0)).select(g.data, S(0));
    SeqBatch<S> dx = x_.zeros_like();
    b_.grad += dz.colwise().sum();
    for (Eigen::Index b = 0; b < x_.batch; ++b) {
      const auto xs = x_.seq(b);
      const auto dzs = dz.middleRows(b * t, t);
      auto dxs = dx.seq(b);
      for (int j = 0; j < opt_.kernel_size; ++j) {
        const Eigen::Index shift = static_cast<Eigen::Index>(opt_.kernel_size - 1 - j) * opt_.dilation;
        if (shift >= t) continue;
        w_.grad.middleRows(j * in_, in_).noalias() += xs.topRows(t - shift).transpose() * dzs.bottomRows(t - shift);
        dxs.topRows(t - shift).noalias() += dzs.bottomRows(t - shift) * w_.value.middleRows(j * in_, in_).transpose();
      }
    }
    if (opt_.residual) {
      if (has_projection()) {
        proj_w_.grad.noalias() += x_.data.transpose() * g.data;
        proj_b_.grad += g.data.colwise().sum();
        dx.data.noalias() += g.data * proj_w_.value.transpose();
      } else {
        dx.data += g.data;
      }
    }
    return dx;
  }

  std::vector<Param<S>*> params() override {
    if (has_projection()) return {&w_, &b_, &proj_w_, &proj_b_};
    return {&w_, &b_};
  }
  std::string name() const override { return "tcn"; }

  bool has_projection() const { return opt_.residual && in_ != out_; }
  Param<S>& weight() { return w_; }
  Param<S>& bias() { return b_; }

 private:
  Eigen::Index in_, out_;
  TcnOptions opt_;
  Param<S> w_, b_, proj_w_, proj_b_;
  SeqBatch<S> x_, z_;
};

/// Single-layer GRU from a zero initial state, returning the full hidden sequence.
///   z = sigmoid(x W_z + h U_z + b_z)
///   r = sigmoid(x W_r + h U_r + b_r)
///   c = tanh(x W_h + (r * h) U_h + b_h)
///   h <- (1 - z) * h + z * c
/// Kernels are packed column-wise as [z | r | h].
template <typename S>
class Gru final : public Layer<S> {
 public:
  Gru(Eigen::Index in, Eigen::Index hidden, std::mt19937_64& rng)
      : in_(in), h_(hidden), w_("gru.W", in, 3 * hidden), u_("gru.U", hidden, 3 * hidden), b_("gru.b", 1, 3 * hidden) {
    detail::init_uniform(w_.value, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    detail::init_uniform(u_.value, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  }

  SeqBatch<S> forward(const SeqBatch<S>& x, bool) override {
    detail::check_features(x.features, in_, "gru");
    x_ = x;
    const Eigen::Index bsz = x.batch, t_len = x.time, h = h_;
    Mat<S> xw = x.data * w_.value;
    xw.rowwise() += b_.value.row(0);

    SeqBatch<S> y(bsz, t_len, h);
    y.lengths = x.lengths;
    steps_.assign(static_cast<std::size_t>(t_len), {});
    Mat<S> state = Mat<S>::Zero(bsz, h);
    Mat<S> pre(bsz, 3 * h);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      for (Eigen::Index b = 0; b < bsz; ++b) pre.row(b) = xw.row(b * t_len + t);
      Step& s = steps_[static_cast<std::size_t>(t)];
      s.h_prev = state;
      pre.leftCols(2 * h).noalias() += state * u_.value.leftCols(2 * h);
      s.z = sigmoid(pre.leftCols(h));
      s.r = sigmoid(pre.middleCols(h, h));
      s.rh = s.r.cwiseProduct(state);
      Mat<S> a = pre.rightCols(h);
      a.noalias() += s.rh * u_.value.rightCols(h);
      s.c = a.array().tanh().matrix();
      state = (S(1) - s.z.array()).matrix().cwiseProduct(state) + s.z.cwiseProduct(s.c);
      for (Eigen::Index b = 0; b < bsz; ++b) y.data.row(b * t_len + t) = state.row(b);
    }
    return y;
  }

  SeqBatch<S> backward(const SeqBatch<S>& g) override {
    const Eigen::Index bsz = x_.batch, t_len = x_.time, h = h_;
    Mat<S> dxw = Mat<S>::Zero(bsz * t_len, 3 * h);
    Mat<S> dh_next = Mat<S>::Zero(bsz, h);
    Mat<S> dh(bsz, h), da(bsz, 3 * h);
    for (Eigen::Index t = t_len - 1; t >= 0; --t) {
      const Step& s = steps_[static_cast<std::size_t>(t)];
      for (Eigen::Index b = 0; b < bsz; ++b) dh.row(b) = g.data.row(b * t_len + t);
      dh += dh_next;
      const Mat<S> dz = dh.cwiseProduct(s.c - s.h_prev);
      const Mat<S> dc = dh.cwiseProduct(s.z);
      dh_next = dh.cwiseProduct((S(1) - s.z.array()).matrix());

      da.rightCols(h) = dc.cwiseProduct((S(1) - s.c.array().square()).matrix());
      u_.grad.rightCols(h).noalias() += s.rh.transpose() * da.rightCols(h);
      const Mat<S> drh = da.rightCols(h) * u_.value.rightCols(h).transpose();
      dh_next += drh.cwiseProduct(s.r);
      const Mat<S> dr = drh.cwiseProduct(s.h_prev);

      da.leftCols(h) = dz.array() * s.z.array() * (S(1) - s.z.array());
      da.middleCols(h, h) = dr.array() * s.r.array() * (S(1) - s.r.array());
      u_.grad.leftCols(2 * h).noalias() += s.h_prev.transpose() * da.leftCols(2 * h);
      dh_next.noalias() += da.leftCols(2 * h) * u_.value.leftCols(2 * h).transpose();

      for (Eigen::Index b = 0; b < bsz; ++b) dxw.row(b * t_len + t) = da.row(b);
    }
    w_.grad.noalias() += x_.data.transpose() * dxw;
    b_.grad += dxw.colwise().sum();
    SeqBatch<S> dx = x_.zeros_like();
    dx.data.noalias() = dxw * w_.value.transpose();
    return dx;
  }

  std::vector<Param<S>*> params() override { return {&w_, &u_, &b_}; }
  std::string name() const override { return "gru"; }

  Eigen::Index hidden() const { return h_; }
  Param<S>& input_kernel() { return w_; }
  Param<S>& recurrent_kernel() { return u_; }
  Param<S>& bias() { return b_; }

 private:
  struct Step {
    Mat<S> h_prev, z, r, rh, c;
  };

  static Mat<S> sigmoid(const Eigen::Ref<const Mat<S>>& a) {
    return (S(1) / (S(1) + (-a.array()).exp())).matrix();
  }

  Eigen::Index in_, h_;
  Param<S> w_, u_, b_;
  SeqBatch<S> x_;
  std::vector<Step> steps_;
};

/// Layers applied in order.
template <typename S>
class Sequential {
 public:
  void add(std::unique_ptr<Layer<S>> layer) { layers_.push_back(std::move(layer)); }

  SeqBatch<S> forward(const SeqBatch<S>& x, bool training) {
    SeqBatch<S> h = x;
    for (auto& l : layers_) h = l->forward(h, training);
    return h;
  }

  SeqBatch<S> backward(const SeqBatch<S>& g) {
    SeqBatch<S> d = g;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
    return d;
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    for (auto& l : layers_) {
      for (auto* p : l->params()) out.push_back(p);
    }
    return out;
  }

  void zero_grad() {
    for (auto* p : params()) p->grad.setZero();
  }

  const std::vector<std::unique_ptr<Layer<S>>>& layers() const { return layers_; }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

}  // namespace eeg2speech::nn
