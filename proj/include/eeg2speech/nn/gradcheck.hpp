#pragma once

#include "eeg2speech/nn/models.hpp"
#include "eeg2speech/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace eeg2speech::nn {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "<tensor>[index]" of the largest error
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// gradient is ~0 from dividing round-off by round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace detail {

struct Coord {
  double* value;
  double analytic;
  std::string label;
};

inline void check_coords(std::vector<Coord>& coords, const std::function<double()>& loss, double eps,
                         GradCheckResult& out) {
  for (auto& c : coords) {
    const double saved = *c.value;
    *c.value = saved + eps;
    const double up = loss();
    *c.value = saved - eps;
    const double down = loss();
    *c.value = saved;
    const double err = relative_error(c.analytic, (up - down) / (2.0 * eps));
    ++out.coordinates;
    if (out.worst.empty() || err > out.max_rel_err) {
      out.max_rel_err = err;
      out.worst = c.label;
    }
  }
}

/// At most `max_coords` parameter coordinates, sampled without replacement.
inline std::vector<Coord> sample_param_coords(const std::vector<Param<double>*>& params, std::size_t max_coords,
                                              std::uint64_t seed) {
  std::vector<Coord> all;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      all.push_back({p->value.data() + i, p->grad.data()[i], p->name + "[" + std::to_string(i) + "]"});
    }
  }
  if (all.size() <= max_coords) return all;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < max_coords; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(all.size() - i));
    std::swap(all[i], all[j]);
  }
  all.resize(max_coords);
  return all;
}

}  // namespace detail

/// Model-level check of d(MSE)/d(params) in inference mode (dropout off).
inline GradCheckResult finite_diff_grad_check(Model<double>& m, const SeqBatch<double>& x,
                                              const SeqBatch<double>& target, std::uint64_t seed,
                                              std::size_t max_coords = 200, double eps = 1e-5) {
  auto loss = [&] {
    auto pred = m.forward(x, false);
    pred.lengths = target.lengths;
    return mse_loss(pred, target).loss;
  };
  m.net.zero_grad();
  auto pred = m.forward(x, false);
  pred.lengths = target.lengths;
  m.backward(mse_loss(pred, target).grad);
  auto coords = detail::sample_param_coords(m.params(), max_coords, seed);
  GradCheckResult r;
  detail::check_coords(coords, loss, eps, r);
  return r;
}

/// Layer-level check with the scalar loss sum(R .* layer(x)) for a fixed random R,
/// covering both input and parameter gradients.
inline GradCheckResult layer_grad_check(Layer<double>& layer, SeqBatch<double> x, std::uint64_t seed,
                                        std::size_t max_coords = 200, double eps = 1e-5) {
  std::mt19937_64 rng(seed);
  const auto y0 = layer.forward(x, false);
  SeqBatch<double> proj = y0.zeros_like();
  for (Eigen::Index i = 0; i < proj.data.size(); ++i) proj.data.data()[i] = 2.0 * uniform01(rng) - 1.0;
  auto loss = [&] { return layer.forward(x, false).data.cwiseProduct(proj.data).sum(); };

  for (auto* p : layer.params()) p->grad.setZero();
  layer.forward(x, false);
  const auto dx = layer.backward(proj);

  auto coords = detail::sample_param_coords(layer.params(), max_coords, mix_seed(seed, 1));
  for (Eigen::Index i = 0; i < x.data.size(); ++i) {
    coords.push_back({x.data.data() + i, dx.data.data()[i], "input[" + std::to_string(i) + "]"});
  }
  GradCheckResult r;
  detail::check_coords(coords, loss, eps, r);
  return r;
}

}  // namespace eeg2speech::nn
