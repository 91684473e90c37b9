#include "eeg2speech/kpca.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace eeg2speech::kpca {

namespace {

constexpr int kFormatVersion = 1;
constexpr double kRankTolerance = 1e-10;

double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

double PolynomialKernel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& y) const {
  return ipow(gamma * x.dot(y) + coef0, degree);
}

RowMatrix PolynomialKernel::gram(const RowMatrix& a, const RowMatrix& b) const {
  RowMatrix k = (gamma * (a * b.transpose())).array() + coef0;
  const int deg = degree;
  return k.unaryExpr([deg](double v) { return ipow(v, deg); });
}

KpcaModel kpca_fit(const RowMatrix& train, int out_dim, const PolynomialKernel& kernel) {
  const Eigen::Index n = train.rows();
  if (out_dim < 1) throw ConfigError("kpca: out_dim must be >= 1");
  if (kernel.degree < 1) throw ConfigError("kpca: degree must be >= 1");
  if (n < out_dim + 1) throw DataError("kpca: need at least out_dim + 1 training rows");
  if (!train.allFinite()) throw DataError("kpca: non-finite training features");

  KpcaModel m;
  m.train = train;
  m.kernel = kernel;
  const RowMatrix k = kernel.gram(train, train);
  m.kernel_col_means = k.colwise().mean().transpose();
  m.kernel_mean = m.kernel_col_means.mean();
  Eigen::MatrixXd kc = k;
  kc.rowwise() -= m.kernel_col_means.transpose();
  kc.colwise() -= m.kernel_col_means;
  kc.array() += m.kernel_mean;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kc);
  if (eig.info() != Eigen::Success) throw NumericError("kpca: eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  m.total_variance = values.cwiseMax(0.0).sum();
  const double top = std::max(values(n - 1), 0.0);

  m.eigenvalues.resize(out_dim);
  m.coefficients = RowMatrix::Zero(n, out_dim);
  for (int j = 0; j < out_dim; ++j) {
    const double lambda = values(n - 1 - j);
    if (top > 0.0 && lambda > kRankTolerance * top) {
      m.eigenvalues(j) = lambda;
      m.coefficients.col(j) = eig.eigenvectors().col(n - 1 - j) / std::sqrt(lambda);
      ++m.effective_components;
    } else {
      m.eigenvalues(j) = 0.0;
    }
  }
  return m;
}

RowMatrix kpca_transform(const KpcaModel& model, const RowMatrix& x) {
  if (x.cols() != model.input_dim()) {
    throw DataError("kpca: expected " + std::to_string(model.input_dim()) + " input columns, got " +
                    std::to_string(x.cols()));
  }
  RowMatrix k = model.kernel.gram(x, model.train);
  const Eigen::VectorXd row_means = k.rowwise().mean();
  k.rowwise() -= model.kernel_col_means.transpose();
  k.colwise() -= row_means;
  k.array() += model.kernel_mean;
  return k * model.coefficients;
}

std::vector<double> explained_variance_curve(const KpcaModel& model) {
  std::vector<double> curve;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < model.eigenvalues.size(); ++j) {
    acc += model.eigenvalues(j);
    curve.push_back(model.total_variance > 0.0 ? acc / model.total_variance : 0.0);
  }
  return curve;
}

namespace {

nlohmann::json matrix_to_json(const RowMatrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

RowMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("kpca file: matrix size mismatch");
  return Eigen::Map<const RowMatrix>(data.data(), rows, cols);
}

}  // namespace

void save_kpca(const std::filesystem::path& path, const KpcaModel& model) {
  nlohmann::json j;
  j["format"] = "eeg2speech-kpca";
  j["version"] = kFormatVersion;
  j["kernel"] = {{"type", "polynomial"},
                 {"degree", model.kernel.degree},
                 {"gamma", model.kernel.gamma},
                 {"coef0", model.kernel.coef0}};
  j["train"] = matrix_to_json(model.train);
  j["coefficients"] = matrix_to_json(model.coefficients);
  j["eigenvalues"] = std::vector<double>(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size());
  j["kernel_col_means"] =
      std::vector<double>(model.kernel_col_means.data(), model.kernel_col_means.data() + model.kernel_col_means.size());
  j["kernel_mean"] = model.kernel_mean;
  j["total_variance"] = model.total_variance;
  j["effective_components"] = model.effective_components;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
}

KpcaModel load_kpca(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "eeg2speech-kpca" || j.at("version").get<int>() != kFormatVersion) {
      throw DataError("kpca file: unsupported format or version");
    }
    KpcaModel m;
    m.kernel.degree = j.at("kernel").at("degree").get<int>();
    m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    m.kernel.coef0 = j.at("kernel").at("coef0").get<double>();
    m.train = matrix_from_json(j.at("train"));
    m.coefficients = matrix_from_json(j.at("coefficients"));
    const auto ev = j.at("eigenvalues").get<std::vector<double>>();
    m.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
    const auto cm = j.at("kernel_col_means").get<std::vector<double>>();
    m.kernel_col_means = Eigen::Map<const Eigen::VectorXd>(cm.data(), static_cast<Eigen::Index>(cm.size()));
    m.kernel_mean = j.at("kernel_mean").get<double>();
    m.total_variance = j.at("total_variance").get<double>();
    m.effective_components = j.at("effective_components").get<int>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("kpca file: " + std::string(e.what()));
  }
}

}  // namespace eeg2speech::kpca
