#pragma once

#include "eeg2speech/nn/models.hpp"
#include "eeg2speech/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace eeg2speech::nn {

struct TrainConfig {
  int epochs = 1;
  int batch_size = 100;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double dropout = 0.2;
  bool shuffle = true;
  // Sequences per forward/backward pass inside one optimizer batch; 0 = whole batch.
  // Gradients are summed with the batch-wide loss denominator, so the update does not depend on it.
  int micro_batch = 0;
  // Also record the dropout-free loss on the training set after each epoch.
  bool track_eval_train_loss = false;
  // With a validation set, finish with the parameters of the lowest-val-loss epoch.
  bool restore_best_val = true;

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train: dropout must be in [0, 1)");
    if (micro_batch < 0) throw ConfigError("train: micro_batch must be >= 0");
  }
};

/// One (input, target) sequence pair in raw units: input T x in_dim, target (T*time_factor) x out_dim.
template <typename S>
struct SeqPair {
  Mat<S> input;
  Mat<S> target;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double eval_train_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainHistory {
  TrainConfig config;
  std::vector<EpochRecord> records;
  int best_epoch = 0;  // epoch whose parameters the model holds at the end

  void write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write history: " + path);
    char buf[256];
    std::snprintf(buf, sizeof buf, "# epochs=%d batch_size=%d lr=%.9g seed=%llu dropout=%.9g best_epoch=%d\n",
                  config.epochs, config.batch_size, config.lr, static_cast<unsigned long long>(config.seed),
                  config.dropout, best_epoch);
    f << buf << "epoch,train_loss,val_loss,eval_train_loss\n";
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_loss, r.eval_train_loss);
      f << buf;
    }
  }
};

namespace detail {

template <typename S>
void check_pair(const Model<S>& m, const SeqPair<S>& p) {
  if (p.input.cols() != m.input_dim) {
    throw DataError("train: input has " + std::to_string(p.input.cols()) + " features, model expects " +
                    std::to_string(m.input_dim));
  }
  if (p.target.cols() != m.output_dim) {
    throw DataError("train: target has " + std::to_string(p.target.cols()) + " features, model produces " +
                    std::to_string(m.output_dim));
  }
  if (p.input.rows() < 1 || p.target.rows() != p.input.rows() * m.time_factor) {
    throw DataError("train: target length " + std::to_string(p.target.rows()) + " != " +
                    std::to_string(m.time_factor) + " x input length " + std::to_string(p.input.rows()));
  }
}

/// Normalized input/target batches for the sequences `idx`.
template <typename S>
std::pair<SeqBatch<S>, SeqBatch<S>> make_batch(const Model<S>& m, const std::vector<SeqPair<S>>& pairs,
                                               const std::vector<std::size_t>& idx) {
  std::vector<Mat<S>> xs, ys;
  xs.reserve(idx.size());
  ys.reserve(idx.size());
  for (auto i : idx) {
    xs.push_back(m.input_norm.apply(pairs[i].input));
    ys.push_back(m.target_norm.apply(pairs[i].target));
  }
  std::vector<const Mat<S>*> px, py;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    px.push_back(&xs[k]);
    py.push_back(&ys[k]);
  }
  return {SeqBatch<S>::from_sequences(px), SeqBatch<S>::from_sequences(py)};
}

template <typename S>
double target_count(const Model<S>& m, const std::vector<SeqPair<S>>& pairs, const std::vector<std::size_t>& idx) {
  double n = 0.0;
  for (auto i : idx) n += static_cast<double>(pairs[i].target.rows() * m.output_dim);
  return n;
}

/// Inference-mode MSE on the normalized scale, pooled over all entries of `pairs`.
template <typename S>
double eval_loss(Model<S>& m, const std::vector<SeqPair<S>>& pairs, int chunk) {
  if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> all(pairs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double denom = target_count(m, pairs, all);
  double loss = 0.0;
  const std::size_t step = chunk > 0 ? static_cast<std::size_t>(chunk) : pairs.size();
  for (std::size_t s = 0; s < pairs.size(); s += step) {
    std::vector<std::size_t> idx(all.begin() + static_cast<std::ptrdiff_t>(s),
                                 all.begin() + static_cast<std::ptrdiff_t>(std::min(s + step, pairs.size())));
    auto [x, y] = make_batch(m, pairs, idx);
    auto pred = m.forward(x, false);
    pred.lengths = y.lengths;
    loss += mse_loss(pred, y, denom).loss;
  }
  return loss;
}

}  // namespace detail

/// Sets input (and, if the model standardizes them, target) normalizers to the per-feature statistics of the training pairs.
template <typename S>
void fit_normalization(Model<S>& m, const std::vector<SeqPair<S>>& pairs) {
  std::vector<const Mat<S>*> xs, ys;
  for (const auto& p : pairs) {
    xs.push_back(&p.input);
    ys.push_back(&p.target);
  }
  m.input_norm = Normalizer::fit<S>(xs);
  m.target_norm = m.standardize_target ? Normalizer::fit<S>(ys) : Normalizer{};
}

/// Length-bucketed minibatches for one epoch: seeded shuffle, stable sort by
/// input length, cut into batches, then shuffle the batch order.
inline std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<Eigen::Index>& lengths, int batch_size,
                                                           bool shuffle, std::uint64_t seed) {
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  if (shuffle) std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
  std::vector<std::vector<std::size_t>> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t s = 0; s < order.size(); s += bs) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(s + bs, order.size())));
  }
  if (shuffle) std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

/// Trains `m` in place with Adam on masked MSE. Normalizers already set on the
/// model are kept; otherwise they are fitted from `train` first.
/// `on_epoch` (optional) sees each record as it is produced.
template <typename S, typename Callback = std::nullptr_t>
TrainHistory train(Model<S>& m, const std::vector<SeqPair<S>>& train, const std::vector<SeqPair<S>>& val,
                   const TrainConfig& cfg, Callback on_epoch = nullptr) {
  cfg.validate();
  if (train.empty()) throw DataError("train: empty training set");
  for (const auto& p : train) detail::check_pair(m, p);
  for (const auto& p : val) detail::check_pair(m, p);
  if (m.input_norm.identity()) fit_normalization(m, train);
  for (const auto& l : m.net.layers()) {
    if (auto* d = dynamic_cast<Dropout<S>*>(l.get())) d->set_rate(cfg.dropout);
  }

  std::vector<Eigen::Index> lengths;
  for (const auto& p : train) lengths.push_back(p.input.rows());

  TrainHistory hist;
  hist.config = cfg;
  AdamState<S> adam;
  adam.hyper.lr = cfg.lr;
  const auto params = m.params();
  const std::size_t micro = cfg.micro_batch > 0 ? static_cast<std::size_t>(cfg.micro_batch) : 0;
  const bool keep_best = cfg.restore_best_val && !val.empty();
  std::vector<Mat<S>> best;
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches =
        epoch_batches(lengths, cfg.batch_size, cfg.shuffle, mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    double epoch_loss = 0.0, epoch_count = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      const double denom = detail::target_count(m, train, batch);
      m.net.zero_grad();
      double batch_loss = 0.0;
      const std::size_t step = micro > 0 ? micro : batch.size();
      for (std::size_t s = 0; s < batch.size(); s += step) {
        std::vector<std::size_t> idx(batch.begin() + static_cast<std::ptrdiff_t>(s),
                                     batch.begin() + static_cast<std::ptrdiff_t>(std::min(s + step, batch.size())));
        auto [x, y] = detail::make_batch(m, train, idx);
        auto pred = m.forward(x, true);
        pred.lengths = y.lengths;
        auto lr = mse_loss(pred, y, denom);
        batch_loss += lr.loss;
        m.backward(lr.grad);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged: loss " + std::to_string(batch_loss) + " at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(bi + 1));
      }
      adam_step(params, adam);
      epoch_loss += batch_loss * denom;
      epoch_count += denom;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / epoch_count;
    rec.val_loss = detail::eval_loss(m, val, cfg.micro_batch);
    if (cfg.track_eval_train_loss) rec.eval_train_loss = detail::eval_loss(m, train, cfg.micro_batch);
    hist.records.push_back(rec);
    if (keep_best && rec.val_loss < best_val) {
      best_val = rec.val_loss;
      hist.best_epoch = epoch;
      best.clear();
      for (const auto* p : params) best.push_back(p->value);
    }
    if constexpr (!std::is_same_v<Callback, std::nullptr_t>) on_epoch(rec);
  }
  if (keep_best && !best.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  } else {
    hist.best_epoch = cfg.epochs;
  }
  return hist;
}

/// Inference on one raw-unit input sequence; returns raw-unit output.
template <typename S>
Mat<S> predict(Model<S>& m, const Mat<S>& input) {
  if (input.cols() != m.input_dim) {
    throw DataError("predict: input has " + std::to_string(input.cols()) + " features, model expects " +
                    std::to_string(m.input_dim));
  }
  const Mat<S> x = m.input_norm.apply(input);
  auto out = m.forward(SeqBatch<S>::from_sequences({&x}), false);
  return m.target_norm.invert(Mat<S>(out.data));
}

}  // namespace eeg2speech::nn
