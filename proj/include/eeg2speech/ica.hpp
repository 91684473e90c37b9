#pragma once

#include "eeg2speech/common.hpp"

#include <cstdint>
#include <vector>

namespace eeg2speech::ica {

/// FastICA fit on channel-major data (channels x samples).
///
/// The data are centered and PCA-whitened to `components` dimensions; the unmixing
/// matrix acts on the whitened signals, so `mixing * components == whitened` and
/// `dewhitening * whitened + residual + mean == data`.
struct IcaResult {
  RowMatrix unmixing;     // k x k, orthogonal
  RowMatrix mixing;       // k x k, inverse of unmixing
  RowMatrix components;   // k x samples
  RowMatrix whitened;     // k x samples
  RowMatrix whitening;    // k x channels
  RowMatrix dewhitening;  // channels x k
  RowMatrix residual;     // channels x samples: energy outside the retained PCA subspace
  Eigen::VectorXd mean;   // per channel
  int iterations = 0;
  bool converged = false;

  int n_components() const { return static_cast<int>(unmixing.rows()); }
};

/// Symmetric fixed-point FastICA with the log-cosh contrast (g = tanh).
/// Converged when max_i |1 - |<w_i_new, w_i_old>|| < tol. On non-convergence the
/// last iterate is returned with `converged == false`. Components whose whitening
/// eigenvalue is numerically zero are dropped, so the result may have fewer than
/// `n_components` rows.
IcaResult fast_ica(const RowMatrix& data, int n_components, std::uint64_t seed,
                   int max_iter = 200, double tol = 1e-4);

/// Excess kurtosis m4 / m2^2 - 3 (0 when m2 < 1e-12).
double excess_kurtosis(std::span<const double> x);

/// Whitened-space reconstructions from the kept and the dropped components.
/// Their sum equals `result.whitened` up to rounding.
std::pair<RowMatrix, RowMatrix> split_reconstruction(const IcaResult& result,
                                                     const std::vector<bool>& keep);

struct ArtifactRemoval {
  RowMatrix cleaned;  // channels x samples
  std::vector<int> removed;
  std::vector<double> kurtosis;  // per component
};

/// Zero every component with |excess kurtosis| > threshold and map the rest back
/// to channel space.
ArtifactRemoval remove_artifact_components(const IcaResult& result, double kurtosis_threshold = 8.0);

}  // namespace eeg2speech::ica
