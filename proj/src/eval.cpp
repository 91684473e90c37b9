#include "eeg2speech/eval.hpp"

#include "eeg2speech/dsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace eeg2speech::eval {

namespace fs = std::filesystem;

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty()) throw DataError("rmse: empty input");
  if (pred.size() != truth.size()) throw DataError("rmse: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double rmse(const RowMatrix& pred, const RowMatrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) throw DataError("rmse: shape mismatch");
  return rmse(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
              std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())));
}

std::string to_string(Scope s) { return s == Scope::Synthesis ? "synthesis" : "acoustic"; }

std::string fnv1a_hex(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"subject", r.subject}, {"condition", r.condition}, {"rmse", r.rmse},
                        {"baseline_rmse", opt_json(r.baseline_rmse)}, {"count", r.count}};
    if (!r.kind.empty()) j["kind"] = r.kind;
    rows_j.push_back(j);
  }
  nlohmann::json trials_j = nlohmann::json::array();
  for (const auto& t : trials) {
    trials_j.push_back({{"id", t.id}, {"subject", t.subject}, {"condition", t.condition}, {"rmse", t.rmse},
                        {"baseline_rmse", opt_json(t.baseline_rmse)}});
  }
  return {{"scope", eval::to_string(scope)}, {"rows", rows_j}, {"trials", trials_j},
          {"warnings", warnings},            {"metadata", metadata}};
}

void MetricsReport::write_json(const fs::path& path) const {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << to_json().dump(2) << '\n';
}

void MetricsReport::write_csv(const fs::path& path) const {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << "subject,condition,kind,rmse,baseline_rmse,count\n";
  char buf[64];
  for (const auto& r : rows) {
    f << r.subject << ',' << r.condition << ',' << r.kind << ',';
    std::snprintf(buf, sizeof buf, "%.9g", r.rmse);
    f << buf << ',';
    if (r.baseline_rmse) {
      std::snprintf(buf, sizeof buf, "%.9g", *r.baseline_rmse);
      f << buf;
    }
    f << ',' << r.count << '\n';
  }
}

MetricsReport evaluate_synthesis(const WavePredictor& predict, const std::vector<SynthesisCase>& cases,
                                 std::optional<double> baseline) {
  if (cases.empty()) throw DataError("evaluate_synthesis: empty test set");
  MetricsReport rep;
  rep.scope = Scope::Synthesis;
  struct Acc {
    double sum = 0.0, base = 0.0;
    std::size_t n = 0;
  };
  std::map<std::pair<int, std::string>, Acc> groups;
  for (const auto& c : cases) {
    const Signal pred = predict(c);
    const std::size_t n = std::min(pred.size(), c.truth.size());
    const std::size_t diff = std::max(pred.size(), c.truth.size()) - n;
    if (diff > kLengthTolerance) {
      rep.warnings.push_back(c.id + ": prediction length " + std::to_string(pred.size()) + " vs truth " +
                             std::to_string(c.truth.size()) + ", truncated to " + std::to_string(n));
    }
    const std::span<const double> truth(c.truth.data(), n);
    TrialMetric t{c.id, c.subject, dataio::to_string(c.condition), rmse(std::span<const double>(pred.data(), n), truth),
                  std::nullopt};
    if (baseline) t.baseline_rmse = rmse(Signal(n, *baseline), truth);
    auto& g = groups[{t.subject, t.condition}];
    g.sum += t.rmse;
    g.base += t.baseline_rmse.value_or(0.0);
    ++g.n;
    rep.trials.push_back(std::move(t));
  }
  for (const auto& [key, g] : groups) {
    MetricRow r;
    r.subject = key.first;
    r.condition = key.second;
    r.rmse = g.sum / static_cast<double>(g.n);
    if (baseline) r.baseline_rmse = g.base / static_cast<double>(g.n);
    r.count = g.n;
    rep.rows.push_back(r);
  }
  rep.metadata["aggregation"] = "mean of per-trial rmse";
  return rep;
}

MetricsReport evaluate_acoustic(const std::map<int, FeaturePredictor>& predictors,
                                const std::vector<AcousticCase>& cases,
                                const std::map<int, Eigen::RowVectorXd>& baselines) {
  if (cases.empty()) throw DataError("evaluate_acoustic: empty test set");
  for (auto k : acoustic::kAllKinds) {
    if (!predictors.count(acoustic::kind_index(k))) {
      throw DataError("evaluate_acoustic: missing model for " + acoustic::kind_label(k));
    }
  }
  MetricsReport rep;
  rep.scope = Scope::Acoustic;
  struct Acc {
    double sq = 0.0, base_sq = 0.0, entries = 0.0;
    std::size_t frames = 0;
  };
  std::map<std::pair<int, std::string>, std::array<Acc, 16>> groups;
  for (const auto& c : cases) {
    auto& accs = groups[{c.subject, dataio::to_string(c.condition)}];
    for (auto k : acoustic::kAllKinds) {
      const int ki = acoustic::kind_index(k);
      const auto it = c.truth.find(ki);
      if (it == c.truth.end()) throw DataError(c.id + ": no reference for " + acoustic::kind_label(k));
      const RowMatrix pred = predictors.at(ki)(c);
      const RowMatrix& truth = it->second;
      if (pred.cols() != truth.cols()) throw DataError(c.id + ": prediction width mismatch for " + acoustic::kind_label(k));
      const Eigen::Index n = std::min(pred.rows(), truth.rows());
      auto& a = accs[static_cast<std::size_t>(ki)];
      a.sq += (pred.topRows(n) - truth.topRows(n)).squaredNorm();
      if (const auto b = baselines.find(ki); b != baselines.end()) {
        a.base_sq += (truth.topRows(n).rowwise() - b->second).squaredNorm();
      }
      a.entries += static_cast<double>(n * truth.cols());
      a.frames += static_cast<std::size_t>(n);
    }
  }
  for (const auto& [key, accs] : groups) {
    for (auto k : acoustic::kAllKinds) {
      const int ki = acoustic::kind_index(k);
      const auto& a = accs[static_cast<std::size_t>(ki)];
      if (a.entries <= 0.0) throw DataError("evaluate_acoustic: no frames for " + acoustic::kind_label(k));
      MetricRow r;
      r.subject = key.first;
      r.condition = key.second;
      r.kind = acoustic::kind_label(k);
      r.rmse = std::sqrt(a.sq / a.entries);
      if (baselines.count(ki)) r.baseline_rmse = std::sqrt(a.base_sq / a.entries);
      r.count = a.frames;
      rep.rows.push_back(r);
    }
  }
  rep.metadata["aggregation"] = "pooled over frames and dimensions per kind";
  return rep;
}

RowMatrix power_to_db(const RowMatrix& power, double floor_db) {
  const double peak = power.size() ? power.maxCoeff() : 0.0;
  RowMatrix db = RowMatrix::Constant(power.rows(), power.cols(), floor_db);
  if (!(peak > 0.0)) return db;
  for (Eigen::Index i = 0; i < power.size(); ++i) {
    const double p = power.data()[i];
    if (p > 0.0) db.data()[i] = std::max(floor_db, 10.0 * std::log10(p / peak));
  }
  return db;
}

SpectrogramFiles spectrogram_export(std::span<const double> wave, int sample_rate_hz, const fs::path& out_prefix,
                                    int fft_size, int hop) {
  if (hop <= 0) hop = dsp::frame_grid_for_rate(sample_rate_hz, 31.0, fft_size).hop;
  const auto spec = dsp::stft_power(wave, fft_size, hop, sample_rate_hz);
  constexpr double kFloor = -80.0;
  const RowMatrix db = power_to_db(spec.power, kFloor);

  SpectrogramFiles files;
  files.frames = static_cast<int>(db.rows());
  files.bins = static_cast<int>(db.cols());
  files.csv = out_prefix;
  files.csv += ".csv";
  files.pgm = out_prefix;
  files.pgm += ".pgm";
  ensure_parent(files.csv);
  dataio::save_matrix_csv(files.csv, db);

  std::ofstream img(files.pgm, std::ios::binary | std::ios::trunc);
  if (!img) throw DataError("cannot write " + files.pgm.string());
  img << "P5\n" << files.frames << ' ' << files.bins << "\n255\n";
  std::string pixels;
  pixels.reserve(static_cast<std::size_t>(db.size()));
  for (Eigen::Index bin = db.cols() - 1; bin >= 0; --bin) {
    for (Eigen::Index f = 0; f < db.rows(); ++f) {
      const double v = std::clamp((db(f, bin) - kFloor) / -kFloor, 0.0, 1.0);
      pixels.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  img.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  if (!img) throw DataError("write failed: " + files.pgm.string());
  return files;
}

}  // namespace eeg2speech::eval
