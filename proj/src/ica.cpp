#include "eeg2speech/ica.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace eeg2speech::ica {

namespace {

// (W W^T)^{-1/2} W
RowMatrix symmetric_decorrelation(const RowMatrix& w) {
  const Eigen::MatrixXd wwt = w * w.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(wwt);
  const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd s = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  return s * w;
}

}  // namespace

double excess_kurtosis(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  if (m2 < 1e-12) return 0.0;
  return m4 / (m2 * m2) - 3.0;
}

IcaResult fast_ica(const RowMatrix& data, int n_components, std::uint64_t seed, int max_iter,
                   double tol) {
  const Eigen::Index channels = data.rows();
  const Eigen::Index n = data.cols();
  if (n_components < 1 || n_components > channels) {
    throw ConfigError("fast_ica: n_components must be in [1, channels]");
  }
  if (n < 2) throw DataError("fast_ica: need at least two samples");
  if (!data.allFinite()) throw DataError("fast_ica: non-finite input");

  IcaResult r;
  r.mean = data.rowwise().mean();
  const RowMatrix centered = data.colwise() - r.mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigen sorts ascending; keep the largest with non-negligible variance.
  const double top = eig.eigenvalues().maxCoeff();
  int k = 0;
  for (int i = 0; i < n_components; ++i) {
    const double lambda = eig.eigenvalues()(channels - 1 - i);
    if (top <= 0.0 || lambda <= 1e-12 * top) break;
    ++k;
  }
  r.whitening.resize(k, channels);
  r.dewhitening.resize(channels, k);
  for (int i = 0; i < k; ++i) {
    const double lambda = eig.eigenvalues()(channels - 1 - i);
    const auto v = eig.eigenvectors().col(channels - 1 - i);
    r.whitening.row(i) = v.transpose() / std::sqrt(lambda);
    r.dewhitening.col(i) = v * std::sqrt(lambda);
  }
  r.whitened = r.whitening * centered;
  r.residual = centered - r.dewhitening * r.whitened;

  if (k == 0) {
    r.unmixing.resize(0, 0);
    r.mixing.resize(0, 0);
    r.components.resize(0, n);
    r.converged = true;
    return r;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RowMatrix w(k, k);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = gauss(rng);
  w = symmetric_decorrelation(w);

  const double inv_n = 1.0 / static_cast<double>(n);
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    const RowMatrix wx = w * r.whitened;
    const RowMatrix g = wx.array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).matrix().rowwise().mean();
    RowMatrix w_new = g * r.whitened.transpose() * inv_n - g_prime_mean.asDiagonal() * w;
    w_new = symmetric_decorrelation(w_new);
    const double change = ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = std::move(w_new);
    if (change < tol) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, max_iter);
  r.unmixing = w;
  r.mixing = w.transpose();
  r.components = w * r.whitened;
  return r;
}

std::pair<RowMatrix, RowMatrix> split_reconstruction(const IcaResult& result,
                                                     const std::vector<bool>& keep) {
  const int k = result.n_components();
  if (static_cast<int>(keep.size()) != k) throw ConfigError("split_reconstruction: mask size mismatch");
  RowMatrix kept = RowMatrix::Zero(k, result.components.cols());
  RowMatrix dropped = kept;
  for (int i = 0; i < k; ++i) {
    const auto contribution = result.mixing.col(i) * result.components.row(i);
    if (keep[static_cast<std::size_t>(i)]) {
      kept += contribution;
    } else {
      dropped += contribution;
    }
  }
  return {kept, dropped};
}

ArtifactRemoval remove_artifact_components(const IcaResult& result, double kurtosis_threshold) {
  const int k = result.n_components();
  ArtifactRemoval out;
  std::vector<bool> keep(static_cast<std::size_t>(k), true);
  for (int i = 0; i < k; ++i) {
    const auto row = result.components.row(i);
    const double kurt = excess_kurtosis(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    out.kurtosis.push_back(kurt);
    if (std::abs(kurt) > kurtosis_threshold) {
      keep[static_cast<std::size_t>(i)] = false;
      out.removed.push_back(i);
    }
  }
  RowMatrix whitened_kept;
  if (k > 0) {
    whitened_kept = split_reconstruction(result, keep).first;
    out.cleaned = result.dewhitening * whitened_kept + result.residual;
  } else {
    out.cleaned = result.residual;
  }
  out.cleaned.colwise() += result.mean;
  return out;
}

}  // namespace eeg2speech::ica
