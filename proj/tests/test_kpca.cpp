#include "eeg2speech/kpca.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "eeg2speech/dsp.hpp"
#include "eeg2speech/eeg_pipeline.hpp"
#include "test_support.hpp"

using namespace eeg2speech;
namespace ts = testsupport;

namespace {

RowMatrix eeg_feature_rows(int n, std::uint64_t seed) {
  const auto trial = dataio::make_synthetic_trial(seed, 0, 0.04 * n);
  eeg::PreprocessOptions opt;
  opt.ica = false;
  const auto clean = eeg::preprocess_eeg(trial.eeg, opt);
  const auto feats = eeg::extract_stat_features(clean, dsp::frame_grid_for_rate(1000));
  return feats.values.topRows(std::min<Eigen::Index>(n, feats.values.rows()));
}

std::vector<std::vector<double>> to_rows(const RowMatrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows[static_cast<std::size_t>(i)].assign(m.row(i).data(), m.row(i).data() + m.cols());
  return rows;
}

}  // namespace

TEST(Kpca, MatchesDenseEigensolverOracle) {
  const RowMatrix x = eeg_feature_rows(120, 3);
  const auto n = static_cast<std::size_t>(x.rows());
  ASSERT_GE(n, 100u);
  const auto model = kpca::kpca_fit(x, 30);
  ASSERT_EQ(model.output_dim(), 30);
  const RowMatrix proj = kpca::kpca_transform(model, x);
  ASSERT_EQ(proj.cols(), 30);

  std::vector<double> vecs;
  const auto vals = ts::jacobi_eigen(ts::centered_poly_kernel(to_rows(x), 3, 1.0 / 155.0, 1.0), n, vecs);
  for (int j = 0; j < 30; ++j) {
    EXPECT_NEAR(model.eigenvalues(j), vals[static_cast<std::size_t>(j)], 1e-8 * vals[0]) << j;
    // Training projection onto component j is sqrt(lambda_j) * v_j.
    double dot = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dot += proj(static_cast<Eigen::Index>(i), j) * vecs[i * n + static_cast<std::size_t>(j)];
      pn += proj(static_cast<Eigen::Index>(i), j) * proj(static_cast<Eigen::Index>(i), j);
    }
    EXPECT_GT(std::abs(dot) / std::sqrt(pn), 0.999) << "component " << j;
    EXPECT_NEAR(pn, vals[static_cast<std::size_t>(j)], 1e-6 * vals[0]);
  }
}

TEST(Kpca, TransformOfTrainingRowsIsConsistent) {
  const RowMatrix x = eeg_feature_rows(80, 4);
  const auto model = kpca::kpca_fit(x, 30);
  const RowMatrix a = kpca::kpca_transform(model, x);
  // Row-by-row transform agrees with the batch transform.
  for (Eigen::Index i = 0; i < x.rows(); i += 13) {
    const RowMatrix one = kpca::kpca_transform(model, x.row(i));
    EXPECT_LT((one.row(0) - a.row(i)).cwiseAbs().maxCoeff(), 1e-8);
  }
  RowMatrix twice(2, x.cols());
  twice << x.row(5), x.row(5);
  const RowMatrix t = kpca::kpca_transform(model, twice);
  EXPECT_EQ(t.row(0), t.row(1));
  // Each training projection column has zero mean because the kernel is centered.
  EXPECT_LT(a.colwise().mean().cwiseAbs().maxCoeff(), 1e-8 * std::sqrt(model.eigenvalues(0)));
  EXPECT_THROW(kpca::kpca_transform(model, RowMatrix::Zero(2, 10)), DataError);
}

TEST(Kpca, ExplainedVarianceCurve) {
  const auto model = kpca::kpca_fit(eeg_feature_rows(60, 5), 30);
  const auto curve = kpca::explained_variance_curve(model);
  ASSERT_EQ(curve.size(), 30u);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i], curve[i - 1]);
  EXPECT_GT(curve.front(), 0.0);
  EXPECT_LE(curve.back(), 1.0 + 1e-12);

  // Linear kernel on collinear points has a rank-1 centered kernel.
  RowMatrix line(40, 3);
  for (int i = 0; i < 40; ++i) line.row(i) << i, 2.0 * i, -0.5 * i;
  const auto lin = kpca::kpca_fit(line, 5, kpca::PolynomialKernel{1, 1.0, 0.0});
  EXPECT_NEAR(kpca::explained_variance_curve(lin).front(), 1.0, 1e-9);
  EXPECT_EQ(lin.effective_components, 1);
}

TEST(Kpca, DuplicatedRowsGiveOneComponent) {
  RowMatrix x(40, 155);
  const auto a = ts::gaussian(155, 1), b = ts::gaussian(155, 2);
  for (int i = 0; i < 40; ++i) {
    const auto& src = i % 2 ? a : b;
    for (int d = 0; d < 155; ++d) x(i, d) = src[static_cast<std::size_t>(d)];
  }
  const auto model = kpca::kpca_fit(x, 30);
  EXPECT_LE(model.effective_components, 1);
  int nonzero = 0;
  for (int j = 0; j < model.output_dim(); ++j) nonzero += model.eigenvalues(j) > 1e-10 * model.eigenvalues(0);
  EXPECT_LE(nonzero, 1);
  const RowMatrix proj = kpca::kpca_transform(model, x);
  EXPECT_TRUE(proj.allFinite());
  EXPECT_EQ(proj.rightCols(29).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Kpca, RowPermutationInvariance) {
  const RowMatrix x = eeg_feature_rows(70, 6);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  RowMatrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  const auto ma = kpca::kpca_fit(x, 10), mb = kpca::kpca_fit(y, 10);
  const RowMatrix probe = eeg_feature_rows(20, 7);
  const RowMatrix pa = kpca::kpca_transform(ma, probe), pb = kpca::kpca_transform(mb, probe);
  for (int j = 0; j < 10; ++j) {
    const double sign = pa.col(j).dot(pb.col(j)) >= 0 ? 1.0 : -1.0;
    EXPECT_LT((pa.col(j) - sign * pb.col(j)).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + pa.col(j).cwiseAbs().maxCoeff())) << j;
  }
}

TEST(Kpca, PersistenceAndPreconditions) {
  const RowMatrix x = eeg_feature_rows(50, 8);
  const auto model = kpca::kpca_fit(x, 30);
  const auto dir = ts::temp_dir("kpca");
  kpca::save_kpca(dir / "m.json", model);
  const auto back = kpca::load_kpca(dir / "m.json");
  EXPECT_EQ(kpca::kpca_transform(back, x), kpca::kpca_transform(model, x));
  EXPECT_EQ(back.effective_components, model.effective_components);
  EXPECT_THROW(kpca::kpca_fit(x.topRows(30), 30), DataError);
  EXPECT_THROW(kpca::load_kpca(dir / "missing.json"), DataError);
}

TEST(Kpca, KernelDefinition) {
  const kpca::PolynomialKernel k{3, 0.5, 1.0};
  Eigen::RowVectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 3.0, -1.0;
  EXPECT_DOUBLE_EQ(k(a, b), std::pow(0.5 * 1.0 + 1.0, 3));
}
