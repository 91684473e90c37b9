#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eeg2speech/common.hpp"

namespace eeg2speech::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// batch x time x features, stored as a (batch*time) x features matrix so that
/// sequence b occupies rows [b*time, (b+1)*time). `lengths[b] <= time` marks the
/// valid prefix of each sequence; padded steps are ignored by the loss.
template <typename S>
struct SeqBatch {
  Eigen::Index batch = 0;
  Eigen::Index time = 0;
  Eigen::Index features = 0;
  Mat<S> data;
  std::vector<Eigen::Index> lengths;

  SeqBatch() = default;
  SeqBatch(Eigen::Index b, Eigen::Index t, Eigen::Index f)
      : batch(b), time(t), features(f), data(Mat<S>::Zero(b * t, f)), lengths(static_cast<std::size_t>(b), t) {}

  auto seq(Eigen::Index b) { return data.middleRows(b * time, time); }
  auto seq(Eigen::Index b) const { return data.middleRows(b * time, time); }

  /// Pads `seqs` (each time_i x features) with zeros to the longest length.
  static SeqBatch from_sequences(const std::vector<const Mat<S>*>& seqs) {
    if (seqs.empty()) throw DataError("SeqBatch: no sequences");
    Eigen::Index t_max = 0;
    const Eigen::Index f = seqs.front()->cols();
    for (const auto* s : seqs) {
      if (s->cols() != f) throw DataError("SeqBatch: feature width differs between sequences");
      t_max = std::max(t_max, s->rows());
    }
    SeqBatch out(static_cast<Eigen::Index>(seqs.size()), t_max, f);
    for (std::size_t b = 0; b < seqs.size(); ++b) {
      out.data.middleRows(static_cast<Eigen::Index>(b) * t_max, seqs[b]->rows()) = *seqs[b];
      out.lengths[b] = seqs[b]->rows();
    }
    return out;
  }

  SeqBatch zeros_like() const {
    SeqBatch z(batch, time, features);
    z.lengths = lengths;
    return z;
  }

  bool all_finite() const { return data.allFinite(); }
};

/// A trainable tensor and its accumulated gradient.
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat<S>::Zero(rows, cols)), grad(Mat<S>::Zero(rows, cols)) {}
};

/// 53-bit uniform in [0, 1) from a 64-bit engine, identical across standard libraries.
template <typename Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace eeg2speech::nn
