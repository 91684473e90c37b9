#pragma once

#include "eeg2speech/nn/tensor.hpp"

#include <cmath>
#include <vector>

namespace eeg2speech::nn {

template <typename S>
struct LossResult {
  double loss = 0.0;
  SeqBatch<S> grad;
  double count = 0.0;  // masked entries
};

/// Mean squared error over the valid prefix of each sequence (pred.lengths).
/// `denominator` overrides the entry count, so micro-batches of one optimizer
/// batch can share a single normalization.
template <typename S>
LossResult<S> mse_loss(const SeqBatch<S>& pred, const SeqBatch<S>& target, double denominator = 0.0) {
  if (pred.batch != target.batch || pred.time != target.time || pred.features != target.features) {
    throw DataError("mse_loss: prediction and target shapes differ");
  }
  double count = 0.0;
  for (auto len : pred.lengths) count += static_cast<double>(len * pred.features);
  if (count <= 0.0) throw DataError("mse_loss: empty mask");
  const double denom = denominator > 0.0 ? denominator : count;
  LossResult<S> r{0.0, pred.zeros_like(), count};
  for (Eigen::Index b = 0; b < pred.batch; ++b) {
    const Eigen::Index len = pred.lengths[static_cast<std::size_t>(b)];
    const auto diff = (pred.seq(b).topRows(len) - target.seq(b).topRows(len)).eval();
    r.loss += diff.template cast<double>().squaredNorm();
    r.grad.seq(b).topRows(len) = diff * static_cast<S>(2.0 / denom);
  }
  r.loss /= denom;
  return r;
}

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
struct AdamState {
  AdamHyper hyper;
  std::vector<Mat<S>> m, v;
  long step = 0;
};

/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), with bias-corrected moments.
template <typename S>
void adam_step(const std::vector<Param<S>*>& params, AdamState<S>& state) {
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw DataError("adam: parameter count changed");
  ++state.step;
  const auto& h = state.hyper;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<S>& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() || state.m[i].rows() != p.value.rows() ||
        state.m[i].cols() != p.value.cols()) {
      throw DataError("adam: shape mismatch for " + p.name);
    }
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = p.grad.array();
    m = static_cast<S>(h.beta1) * m + static_cast<S>(1.0 - h.beta1) * g;
    v = static_cast<S>(h.beta2) * v + static_cast<S>(1.0 - h.beta2) * g.square();
    p.value.array() -= static_cast<S>(h.lr) * (m / static_cast<S>(c1)) /
                       ((v / static_cast<S>(c2)).sqrt() + static_cast<S>(h.eps));
  }
}

}  // namespace eeg2speech::nn
