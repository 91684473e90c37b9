#pragma once

#include "eeg2speech/nn/layers.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <memory>
#include <random>
#include <string>

namespace eeg2speech::nn {

/// Raw-EEG to waveform stack:
///   TCN(31 -> filters1) -> up x up1 -> dropout -> TCN(filters1 -> filters2) -> up x up2 -> dense(filters2 -> 1)
/// With `head_before_final_upsample`, the dense head runs before the last upsample.
struct SynthesisConfig {
  int in_channels = 31;
  int filters1 = 256;
  int filters2 = 32;
  int up1 = 5;
  int up2 = 3;
  double dropout = 0.2;
  TcnOptions tcn;
  UpsampleMode upsample = UpsampleMode::Nearest;
  bool head_before_final_upsample = false;

  int time_factor() const { return up1 * up2; }
};

/// GRU(in -> hidden) -> dropout -> dense(hidden -> out_dim), linear output.
struct RegressionConfig {
  int in_dim = 30;
  int hidden = 128;
  double dropout = 0.2;
};

/// Output widths accepted by the regression head: the acoustic feature dimensions.
inline constexpr std::array<int, 7> kRegressionOutDims = {1, 2, 6, 7, 12, 128, 384};

inline nlohmann::json to_json(const SynthesisConfig& c) {
  return {{"in_channels", c.in_channels},
          {"filters1", c.filters1},
          {"filters2", c.filters2},
          {"up1", c.up1},
          {"up2", c.up2},
          {"dropout", c.dropout},
          {"kernel_size", c.tcn.kernel_size},
          {"dilation", c.tcn.dilation},
          {"residual", c.tcn.residual},
          {"upsample", c.upsample == UpsampleMode::Nearest ? "nearest" : "linear"},
          {"head_before_final_upsample", c.head_before_final_upsample}};
}

inline SynthesisConfig synthesis_config_from_json(const nlohmann::json& j) {
  SynthesisConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.filters1 = j.at("filters1").get<int>();
  c.filters2 = j.at("filters2").get<int>();
  c.up1 = j.at("up1").get<int>();
  c.up2 = j.at("up2").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.tcn.kernel_size = j.at("kernel_size").get<int>();
  c.tcn.dilation = j.at("dilation").get<int>();
  c.tcn.residual = j.at("residual").get<bool>();
  c.upsample = j.at("upsample").get<std::string>() == "linear" ? UpsampleMode::Linear : UpsampleMode::Nearest;
  c.head_before_final_upsample = j.at("head_before_final_upsample").get<bool>();
  return c;
}

inline nlohmann::json to_json(const RegressionConfig& c) {
  return {{"in_dim", c.in_dim}, {"hidden", c.hidden}, {"dropout", c.dropout}};
}

inline RegressionConfig regression_config_from_json(const nlohmann::json& j) {
  RegressionConfig c;
  c.in_dim = j.at("in_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

/// Per-feature affine normalization (x - mean) / scale. Empty vectors mean identity.
struct Normalizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  bool identity() const { return mean.size() == 0; }

  template <typename S>
  Mat<S> apply(const Mat<S>& x) const {
    if (identity()) return x;
    return ((x.template cast<double>().rowwise() - mean).array().rowwise() / scale.array())
        .matrix()
        .template cast<S>();
  }

  template <typename S>
  Mat<S> invert(const Mat<S>& y) const {
    if (identity()) return y;
    return ((y.template cast<double>().array().rowwise() * scale.array()).matrix().rowwise() + mean)
        .template cast<S>();
  }

  /// Column statistics over stacked rows; scales below 1e-8 become 1.
  template <typename S>
  static Normalizer fit(const std::vector<const Mat<S>*>& rows) {
    Eigen::Index n = 0, f = 0;
    for (const auto* m : rows) {
      n += m->rows();
      f = m->cols();
    }
    Normalizer z;
    z.mean = Eigen::RowVectorXd::Zero(f);
    z.scale = Eigen::RowVectorXd::Zero(f);
    if (n == 0) return {};
    for (const auto* m : rows) z.mean += m->template cast<double>().colwise().sum();
    z.mean /= static_cast<double>(n);
    for (const auto* m : rows) {
      z.scale += (m->template cast<double>().rowwise() - z.mean).array().square().matrix().colwise().sum();
    }
    z.scale = (z.scale / static_cast<double>(n)).cwiseSqrt();
    for (Eigen::Index i = 0; i < f; ++i) {
      if (!(z.scale(i) > 1e-8)) z.scale(i) = 1.0;
    }
    return z;
  }
};

template <typename S>
class Model {
 public:
  std::string kind;  // "synthesis" or "regression"
  nlohmann::json config;
  std::uint64_t seed = 0;
  int input_dim = 0;
  int output_dim = 0;
  int time_factor = 1;
  // Synthesis trains on the raw waveform scale; regression targets are standardized
  // because acoustic kinds span Hz, dB and unit-free ranges.
  bool standardize_target = true;
  Normalizer input_norm;
  Normalizer target_norm;
  Sequential<S> net;

  SeqBatch<S> forward(const SeqBatch<S>& x, bool training) {
    if (x.features != input_dim) {
      throw DataError(kind + " model: expected " + std::to_string(input_dim) + " input features, got " +
                      std::to_string(x.features));
    }
    return net.forward(x, training);
  }

  SeqBatch<S> backward(const SeqBatch<S>& g) { return net.backward(g); }
  std::vector<Param<S>*> params() { return net.params(); }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  template <typename L>
  L* find_layer(int occurrence = 0) {
    for (const auto& l : net.layers()) {
      if (auto* hit = dynamic_cast<L*>(l.get())) {
        if (occurrence-- == 0) return hit;
      }
    }
    return nullptr;
  }
};

template <typename S>
Model<S> build_synthesis_model(std::uint64_t seed, const SynthesisConfig& cfg = {}) {
  if (cfg.in_channels < 1 || cfg.filters1 < 1 || cfg.filters2 < 1) throw ConfigError("synthesis: widths must be >= 1");
  Model<S> m;
  m.kind = "synthesis";
  m.config = to_json(cfg);
  m.seed = seed;
  m.input_dim = cfg.in_channels;
  m.output_dim = 1;
  m.time_factor = cfg.time_factor();
  m.standardize_target = false;
  std::mt19937_64 rng(mix_seed(seed, 0));
  m.net.add(std::make_unique<TcnBlock<S>>(cfg.in_channels, cfg.filters1, cfg.tcn, rng, "tcn1"));
  m.net.add(std::make_unique<Upsample<S>>(cfg.up1, cfg.upsample));
  m.net.add(std::make_unique<Dropout<S>>(cfg.dropout, mix_seed(seed, 1)));
  m.net.add(std::make_unique<TcnBlock<S>>(cfg.filters1, cfg.filters2, cfg.tcn, rng, "tcn2"));
  if (cfg.head_before_final_upsample) {
    m.net.add(std::make_unique<Dense<S>>(cfg.filters2, 1, rng));
    m.net.add(std::make_unique<Upsample<S>>(cfg.up2, cfg.upsample));
  } else {
    m.net.add(std::make_unique<Upsample<S>>(cfg.up2, cfg.upsample));
    m.net.add(std::make_unique<Dense<S>>(cfg.filters2, 1, rng));
  }
  return m;
}

template <typename S>
Model<S> build_regression_model(int out_dim, std::uint64_t seed, const RegressionConfig& cfg = {}) {
  if (std::find(kRegressionOutDims.begin(), kRegressionOutDims.end(), out_dim) == kRegressionOutDims.end()) {
    throw ConfigError("regression: out_dim " + std::to_string(out_dim) + " is not an acoustic feature dimension");
  }
  if (cfg.in_dim < 1 || cfg.hidden < 1) throw ConfigError("regression: widths must be >= 1");
  Model<S> m;
  m.kind = "regression";
  m.config = to_json(cfg);
  m.config["out_dim"] = out_dim;
  m.seed = seed;
  m.input_dim = cfg.in_dim;
  m.output_dim = out_dim;
  std::mt19937_64 rng(mix_seed(seed, 0));
  m.net.add(std::make_unique<Gru<S>>(cfg.in_dim, cfg.hidden, rng));
  m.net.add(std::make_unique<Dropout<S>>(cfg.dropout, mix_seed(seed, 1)));
  m.net.add(std::make_unique<Dense<S>>(cfg.hidden, out_dim, rng));
  return m;
}

/// Closed-form parameter count of the synthesis stack.
inline std::size_t synthesis_parameter_count(const SynthesisConfig& c) {
  auto tcn = [&](std::size_t in, std::size_t out) {
    std::size_t n = static_cast<std::size_t>(c.tcn.kernel_size) * in * out + out;
    if (c.tcn.residual && in != out) n += in * out + out;
    return n;
  };
  const auto ch = static_cast<std::size_t>(c.in_channels);
  const auto f1 = static_cast<std::size_t>(c.filters1);
  const auto f2 = static_cast<std::size_t>(c.filters2);
  return tcn(ch, f1) + tcn(f1, f2) + f2 + 1;
}

/// Rebuilds an untrained model of the recorded kind and configuration.
template <typename S>
Model<S> rebuild_model(const std::string& kind, const nlohmann::json& config, std::uint64_t seed) {
  if (kind == "synthesis") return build_synthesis_model<S>(seed, synthesis_config_from_json(config));
  if (kind == "regression") {
    return build_regression_model<S>(config.at("out_dim").get<int>(), seed, regression_config_from_json(config));
  }
  throw DataError("unknown model kind '" + kind + "'");
}

}  // namespace eeg2speech::nn
