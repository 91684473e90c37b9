#pragma once

#include "eeg2speech/common.hpp"

#include <filesystem>
#include <vector>

namespace eeg2speech::kpca {

/// k(x, y) = (gamma * <x, y> + coef0)^degree
struct PolynomialKernel {
  int degree = 3;
  double gamma = 1.0 / 155.0;
  double coef0 = 1.0;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                    const Eigen::Ref<const Eigen::RowVectorXd>& y) const;
  /// Gram matrix between the rows of a and the rows of b.
  RowMatrix gram(const RowMatrix& a, const RowMatrix& b) const;
};

struct KpcaModel {
  RowMatrix train;            // n x d
  RowMatrix coefficients;     // n x out_dim, eigenvectors scaled by 1/sqrt(eigenvalue)
  Eigen::VectorXd eigenvalues;  // out_dim, non-increasing, >= 0
  PolynomialKernel kernel;
  Eigen::VectorXd kernel_col_means;  // n, column means of the uncentered training kernel
  double kernel_mean = 0.0;          // grand mean of the uncentered training kernel
  double total_variance = 0.0;       // trace of the centered training kernel
  int effective_components = 0;      // eigenvalues above the rank tolerance

  int input_dim() const { return static_cast<int>(train.cols()); }
  int output_dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Kernel PCA on the double-centered polynomial kernel. Components whose eigenvalue
/// falls below 1e-10 of the largest are treated as rank-deficient: their
/// eigenvalue is reported as 0 and their projection is identically 0.
KpcaModel kpca_fit(const RowMatrix& train, int out_dim = 30, const PolynomialKernel& kernel = {});

/// Projects rows of `x` (m x d) onto the fitted components (m x out_dim).
RowMatrix kpca_transform(const KpcaModel& model, const RowMatrix& x);

/// Cumulative eigenvalue fraction of the centered kernel's total mass, one entry per component.
std::vector<double> explained_variance_curve(const KpcaModel& model);

/// Versioned JSON container.
void save_kpca(const std::filesystem::path& path, const KpcaModel& model);
KpcaModel load_kpca(const std::filesystem::path& path);

}  // namespace eeg2speech::kpca
