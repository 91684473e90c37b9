#include "eeg2speech/pipeline.hpp"

#include "eeg2speech/acoustic.hpp"
#include "eeg2speech/dsp.hpp"
#include "eeg2speech/eval.hpp"
#include "eeg2speech/kpca.hpp"
#include "eeg2speech/nn/checkpoint.hpp"
#include "eeg2speech/nn/gradcheck.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

namespace eeg2speech::pipeline {

namespace fs = std::filesystem;
using cli::RunConfig;
using cli::RunFilter;
using dataio::Condition;
using nlohmann::json;

namespace {

// Seed streams derived from the root seed, one per randomized stage.
enum Stream : std::uint64_t {
  kDataStream = 1,
  kSplitStream = 2,
  kIcaStream = 3,
  kSynthInitStream = 4,
  kSynthTrainStream = 5,
  kRegressInitStream = 6,
  kRegressTrainStream = 7,
  kGradCheckStream = 8,
};

std::uint64_t stage_seed(const RunConfig& cfg, Stream stream, std::string_view tag = {}) {
  return mix_seed(mix_seed(cfg.seed, stream), fnv1a64(tag));
}

fs::path out(const RunConfig& cfg, const std::string& rel) { return cfg.out_path() / rel; }

dataio::DatasetManifest manifest_for(const RunConfig& cfg, const RunFilter& filter) {
  const fs::path path = cfg.data_dir() / "manifest.json";
  if (!fs::exists(path)) throw DataError("no manifest at " + path.string() + " (run gen-data first)");
  auto m = dataio::load_manifest(path).filtered(filter.subject, filter.condition);
  if (m.trials.empty()) throw DataError("no trials match the subject/condition filter");
  return m;
}

using GroupKey = std::pair<int, Condition>;

std::map<GroupKey, std::vector<dataio::TrialRecord>> groups_of(const dataio::DatasetManifest& m) {
  std::map<GroupKey, std::vector<dataio::TrialRecord>> g;
  for (const auto& t : m.trials) g[{t.subject, t.condition}].push_back(t);
  return g;
}

std::string group_name(const GroupKey& k) { return pipeline::group_name(k.first, k.second); }

void require_file(const fs::path& p, const char* producer) {
  if (!fs::exists(p)) throw DataError("missing " + p.string() + " (run " + producer + " first)");
}

dataio::SplitAssignment load_or_make_split(const RunConfig& cfg) {
  const fs::path p = out(cfg, "split.json");
  if (!fs::exists(p)) pipeline::split(cfg);
  return dataio::load_split(p);
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

std::vector<dataio::TrialRecord> select(const std::vector<dataio::TrialRecord>& trials,
                                        const std::set<std::string>& ids) {
  std::vector<dataio::TrialRecord> out;
  for (const auto& t : trials) {
    if (ids.count(t.id)) out.push_back(t);
  }
  return out;
}

dataio::EegRecording load_clean(const RunConfig& cfg, const std::string& id) {
  const fs::path p = out(cfg, "clean/" + id + ".f32");
  require_file(p, "preprocess");
  return dataio::read_eeg_binary(p);
}

RowMatrix load_matrix(const fs::path& p, const char* producer) {
  require_file(p, producer);
  return dataio::load_matrix_csv(p);
}

acoustic::AcousticOptions acoustic_options(const RunConfig& cfg) {
  acoustic::AcousticOptions o;
  o.sample_rate_hz = cfg.acoustic_rate_hz;
  o.fft_size = cfg.acoustic_fft_size;
  o.frame_rate_hz = cfg.frame_rate_hz;
  return o;
}

Signal audio_at_model_rate(const RunConfig& cfg, const dataio::DatasetManifest& m, const dataio::TrialRecord& t) {
  const auto clip = dataio::read_wav(m.root / t.wav_path);
  if (clip.sample_rate_hz == cfg.acoustic_rate_hz) return clip.samples;
  return dsp::resample_poly(clip.samples, clip.sample_rate_hz, cfg.acoustic_rate_hz);
}

/// Model input (T x 31) and the aligned waveform (T * time_factor samples).
struct SynthTrial {
  RowMatrix input;
  Signal target;
};

SynthTrial synth_trial(const RunConfig& cfg, const dataio::DatasetManifest& m, const dataio::TrialRecord& t) {
  const auto eeg = load_clean(cfg, t.id);
  const int factor = cfg.synth.time_factor();
  if (static_cast<long>(eeg.sample_rate_hz) * factor != cfg.acoustic_rate_hz) {
    throw ConfigError("synthesis: EEG rate " + std::to_string(eeg.sample_rate_hz) + " x upsampling " +
                      std::to_string(factor) + " != acoustic.sample_rate_hz " + std::to_string(cfg.acoustic_rate_hz));
  }
  const Signal audio = audio_at_model_rate(cfg, m, t);
  const Eigen::Index steps = std::min<Eigen::Index>(eeg.samples(), static_cast<Eigen::Index>(audio.size()) / factor);
  if (steps < 1) throw DataError(t.id + ": audio shorter than one EEG sample");
  SynthTrial s;
  s.input = eeg.data.leftCols(steps).transpose();
  s.target.assign(audio.begin(), audio.begin() + steps * factor);
  return s;
}

nn::SeqPair<float> to_pair(const RowMatrix& input, const RowMatrix& target) {
  return {input.cast<float>(), target.cast<float>()};
}

RowMatrix column(const Signal& s) {
  return Eigen::Map<const RowMatrix>(s.data(), static_cast<Eigen::Index>(s.size()), 1);
}

int kind_offset(int kind) {
  int off = 0;
  for (int k = 0; k < kind; ++k) off += acoustic::kKindDims[static_cast<std::size_t>(k)];
  return off;
}

/// Reduced EEG features and one acoustic kind, truncated to a common frame count.
std::pair<RowMatrix, RowMatrix> regress_trial(const RunConfig& cfg, const std::string& id, int kind) {
  const RowMatrix x = load_matrix(out(cfg, "eeg_reduced/" + id + ".csv"), "fit-kpca");
  const RowMatrix a = load_matrix(out(cfg, "acoustic/" + id + ".csv"), "extract-acoustic");
  if (a.cols() != acoustic::kTotalDim) throw DataError(id + ": acoustic matrix is not 571 wide");
  const Eigen::Index n = std::min(x.rows(), a.rows());
  if (n < 1) throw DataError(id + ": no frames");
  const int dim = acoustic::kKindDims[static_cast<std::size_t>(kind)];
  return {x.topRows(n), a.block(0, kind_offset(kind), n, dim)};
}

std::vector<int> kinds_for(const RunFilter& filter) {
  if (filter.kind) return {*filter.kind};
  std::vector<int> all;
  for (auto k : acoustic::kAllKinds) all.push_back(acoustic::kind_index(k));
  return all;
}

std::string synth_ckpt(const GroupKey& g) { return "models/synth_" + group_name(g) + ".ckpt"; }
std::string regress_ckpt(const GroupKey& g, int kind) {
  return "models/regress_" + group_name(g) + "_f" + std::to_string(kind + 1) + ".ckpt";
}

auto progress(const RunConfig& cfg, const std::string& label) {
  return [every = cfg.log_every, label](const nn::EpochRecord& r) {
    if (every > 0 && r.epoch % every == 0) {
      std::fprintf(stderr, "%s epoch %d train %.6g val %.6g\n", label.c_str(), r.epoch, r.train_loss, r.val_loss);
    }
  };
}

json report_metadata(const RunConfig& cfg) {
  return {{"seed", cfg.seed},
          {"config_hash", eval::fnv1a_hex(cli::format_config_for_hash(cfg))},
          {"timestamps", "excluded for reproducibility"}};
}

}  // namespace

std::string group_name(int subject, Condition condition) {
  return "s" + std::to_string(subject) + "_" + dataio::to_string(condition);
}

json gen_data(const RunConfig& cfg) {
  dataio::SyntheticOptions opt;
  opt.n_subjects = cfg.n_subjects;
  opt.conditions = cfg.conditions;
  opt.audio_rate_hz = cfg.audio_rate_hz;
  const auto m = dataio::generate_synthetic_dataset(cfg.n_trials, cfg.duration_s, mix_seed(cfg.seed, kDataStream),
                                                    cfg.data_dir(), opt);
  return {{"trials", m.trials.size()}, {"data_root", cfg.data_dir().string()}};
}

json preprocess(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  std::size_t removed = 0, unconverged = 0;
  for (const auto& t : m.trials) {
    const auto rec = dataio::read_eeg(m.root / t.eeg_path);
    auto opt = cfg.preprocess;
    opt.ica_seed = stage_seed(cfg, kIcaStream, t.id);
    const auto clean = eeg::preprocess_eeg(rec, opt);
    removed += clean.removed_components.size();
    if (!clean.ica_converged) ++unconverged;
    dataio::EegRecording outrec;
    outrec.sample_rate_hz = clean.sample_rate_hz;
    outrec.data = clean.data;
    dataio::write_eeg_binary(out(cfg, "clean/" + t.id + ".f32"), outrec);
  }
  return {{"trials", m.trials.size()}, {"removed_components", removed}, {"ica_unconverged", unconverged}};
}

json extract_eeg_feats(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  std::size_t frames = 0;
  for (const auto& t : m.trials) {
    const auto rec = load_clean(cfg, t.id);
    eeg::CleanEeg clean;
    clean.sample_rate_hz = rec.sample_rate_hz;
    clean.data = rec.data;
    const auto grid = dsp::frame_grid_for_rate(rec.sample_rate_hz, cfg.frame_rate_hz, cfg.stat_window);
    const auto feats = eeg::extract_stat_features(clean, grid);
    frames += static_cast<std::size_t>(feats.values.rows());
    dataio::save_matrix_csv(out(cfg, "eeg_feats/" + t.id + ".csv"), feats.values);
  }
  return {{"trials", m.trials.size()}, {"frames", frames}, {"dim", eeg::kStatFeatureDim}};
}

json split(const RunConfig& cfg) {
  const auto m = manifest_for(cfg, {});
  dataio::SplitAssignment all;
  all.seed = cfg.seed;
  for (const auto& [key, trials] : groups_of(m)) {
    std::vector<std::string> ids;
    for (const auto& t : trials) ids.push_back(t.id);
    const auto s = dataio::make_split(ids, cfg.split, stage_seed(cfg, kSplitStream, group_name(key)));
    all.train_ids.insert(all.train_ids.end(), s.train_ids.begin(), s.train_ids.end());
    all.val_ids.insert(all.val_ids.end(), s.val_ids.begin(), s.val_ids.end());
    all.test_ids.insert(all.test_ids.end(), s.test_ids.begin(), s.test_ids.end());
  }
  dataio::save_split(out(cfg, "split.json"), all);
  return {{"train", all.train_ids.size()}, {"val", all.val_ids.size()}, {"test", all.test_ids.size()}};
}

json fit_kpca(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, RunFilter{filter.subject, std::nullopt, std::nullopt});
  const auto train_ids = as_set(load_or_make_split(cfg).train_ids);

  std::map<std::string, std::vector<dataio::TrialRecord>> scopes;
  for (const auto& t : m.trials) {
    scopes[cfg.kpca_per_subject ? "subject_" + std::to_string(t.subject) : "pooled"].push_back(t);
  }
  json models = json::array();
  for (const auto& [scope, trials] : scopes) {
    std::vector<RowMatrix> train_feats;
    Eigen::Index rows = 0;
    for (const auto& t : select(trials, train_ids)) {
      train_feats.push_back(load_matrix(out(cfg, "eeg_feats/" + t.id + ".csv"), "extract-eeg-feats"));
      rows += train_feats.back().rows();
    }
    if (rows == 0) throw DataError("kpca " + scope + ": no training frames");
    RowMatrix stacked(rows, eeg::kStatFeatureDim);
    Eigen::Index r = 0;
    for (const auto& f : train_feats) {
      stacked.middleRows(r, f.rows()) = f;
      r += f.rows();
    }
    // Evenly strided subset keeps the n x n eigenproblem tractable.
    if (rows > cfg.kpca_max_train_frames) {
      RowMatrix sub(cfg.kpca_max_train_frames, stacked.cols());
      for (Eigen::Index i = 0; i < sub.rows(); ++i) sub.row(i) = stacked.row(i * rows / sub.rows());
      stacked = std::move(sub);
    }
    kpca::PolynomialKernel kernel{cfg.kpca_degree, cfg.kpca_gamma, cfg.kpca_coef0};
    const auto model = kpca::kpca_fit(stacked, cfg.kpca_dim, kernel);
    kpca::save_kpca(out(cfg, "kpca/" + scope + ".json"), model);
    for (const auto& t : trials) {
      const RowMatrix x = load_matrix(out(cfg, "eeg_feats/" + t.id + ".csv"), "extract-eeg-feats");
      dataio::save_matrix_csv(out(cfg, "eeg_reduced/" + t.id + ".csv"), kpca::kpca_transform(model, x));
    }
    const auto curve = kpca::explained_variance_curve(model);
    models.push_back({{"scope", scope},
                      {"train_frames", stacked.rows()},
                      {"effective_components", model.effective_components},
                      {"explained_variance", curve.empty() ? 0.0 : curve.back()}});
  }
  return {{"models", models}};
}

json extract_acoustic(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  const auto opt = acoustic_options(cfg);
  std::size_t frames = 0;
  for (const auto& t : m.trials) {
    const Signal audio = audio_at_model_rate(cfg, m, t);
    const auto set = acoustic::extract_acoustic_set(audio, opt);
    frames += static_cast<std::size_t>(set.frames());
    dataio::save_matrix_csv(out(cfg, "acoustic/" + t.id + ".csv"), set.concatenated());
  }
  return {{"trials", m.trials.size()}, {"frames", frames}, {"dim", acoustic::kTotalDim}};
}

json train_synth(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  const auto split = load_or_make_split(cfg);
  const auto train_ids = as_set(split.train_ids), val_ids = as_set(split.val_ids);
  json groups = json::array();
  for (const auto& [key, trials] : groups_of(m)) {
    std::vector<nn::SeqPair<float>> train, val;
    for (const auto& t : select(trials, train_ids)) {
      auto s = synth_trial(cfg, m, t);
      train.push_back(to_pair(s.input, column(s.target)));
    }
    for (const auto& t : select(trials, val_ids)) {
      auto s = synth_trial(cfg, m, t);
      val.push_back(to_pair(s.input, column(s.target)));
    }
    if (train.empty()) throw DataError(group_name(key) + ": no training trials");
    auto model = nn::build_synthesis_model<float>(stage_seed(cfg, kSynthInitStream, group_name(key)), cfg.synth);
    auto tc = cfg.synth_train;
    tc.seed = stage_seed(cfg, kSynthTrainStream, group_name(key));
    tc.dropout = cfg.synth.dropout;
    const auto hist = nn::train(model, train, val, tc, progress(cfg, "train-synth " + group_name(key)));
    fs::create_directories(out(cfg, "models"));
    nn::save_checkpoint(model, out(cfg, synth_ckpt(key)).string());
    hist.write_csv(out(cfg, "models/synth_" + group_name(key) + ".history.csv").string());
    groups.push_back({{"group", group_name(key)},
                      {"train_trials", train.size()},
                      {"parameters", model.parameter_count()},
                      {"epochs", tc.epochs},
                      {"best_epoch", hist.best_epoch},
                      {"final_train_loss", hist.records.back().train_loss},
                      {"final_val_loss", std::isfinite(hist.records.back().val_loss)
                                             ? json(hist.records.back().val_loss)
                                             : json(nullptr)}});
  }
  return {{"groups", groups}};
}

json train_regress(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  const auto split = load_or_make_split(cfg);
  const auto train_ids = as_set(split.train_ids), val_ids = as_set(split.val_ids);
  json models = json::array();
  for (const auto& [key, trials] : groups_of(m)) {
    for (int kind : kinds_for(filter)) {
      const std::string tag = group_name(key) + "_f" + std::to_string(kind + 1);
      std::vector<nn::SeqPair<float>> train, val;
      for (const auto& t : select(trials, train_ids)) {
        auto [x, y] = regress_trial(cfg, t.id, kind);
        train.push_back(to_pair(x, y));
      }
      for (const auto& t : select(trials, val_ids)) {
        auto [x, y] = regress_trial(cfg, t.id, kind);
        val.push_back(to_pair(x, y));
      }
      if (train.empty()) throw DataError(tag + ": no training trials");
      auto rc = cfg.regress;
      rc.in_dim = static_cast<int>(train.front().input.cols());
      auto model = nn::build_regression_model<float>(acoustic::kKindDims[static_cast<std::size_t>(kind)],
                                                     stage_seed(cfg, kRegressInitStream, tag), rc);
      auto tc = cfg.regress_train;
      tc.seed = stage_seed(cfg, kRegressTrainStream, tag);
      tc.dropout = cfg.regress.dropout;
      const auto hist = nn::train(model, train, val, tc, progress(cfg, "train-regress " + tag));
      fs::create_directories(out(cfg, "models"));
      nn::save_checkpoint(model, out(cfg, regress_ckpt(key, kind)).string());
      hist.write_csv(out(cfg, "models/regress_" + tag + ".history.csv").string());
      models.push_back({{"model", tag}, {"best_epoch", hist.best_epoch}});
    }
  }
  return {{"models", models}};
}

json eval_synth(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  const auto split = load_or_make_split(cfg);
  const auto test_ids = as_set(split.test_ids), train_ids = as_set(split.train_ids);
  eval::MetricsReport combined;
  combined.scope = eval::Scope::Synthesis;
  for (const auto& [key, trials] : groups_of(m)) {
    const fs::path ckpt = out(cfg, synth_ckpt(key));
    require_file(ckpt, "train-synth");
    auto model = nn::load_checkpoint<float>(ckpt.string());
    std::vector<eval::SynthesisCase> cases;
    for (const auto& t : select(trials, test_ids)) {
      auto s = synth_trial(cfg, m, t);
      cases.push_back({t.id, t.subject, t.condition, std::move(s.input), std::move(s.target)});
    }
    if (cases.empty()) throw DataError(group_name(key) + ": no test trials");
    auto predictor = [&model](const eval::SynthesisCase& c) {
      const nn::Mat<float> y = nn::predict(model, nn::Mat<float>(c.input.cast<float>()));
      return Signal(y.data(), y.data() + y.size());
    };
    // Mean predictor baseline: the training-set mean sample value.
    double sum = 0.0, n_samples = 0.0;
    for (const auto& t : select(trials, train_ids)) {
      const auto target = synth_trial(cfg, m, t).target;
      for (double v : target) sum += v;
      n_samples += static_cast<double>(target.size());
    }
    if (n_samples == 0.0) throw DataError(group_name(key) + ": no training trials for the baseline");
    const auto rep = eval::evaluate_synthesis(predictor, cases, sum / n_samples);
    combined.rows.insert(combined.rows.end(), rep.rows.begin(), rep.rows.end());
    combined.trials.insert(combined.trials.end(), rep.trials.begin(), rep.trials.end());
    combined.warnings.insert(combined.warnings.end(), rep.warnings.begin(), rep.warnings.end());
  }
  combined.metadata = report_metadata(cfg);
  combined.metadata["aggregation"] = "mean of per-trial rmse per subject x condition";
  combined.metadata["scale"] = "waveform samples in [-1, 1] at the model output rate";
  combined.metadata["baseline"] = "constant training-set mean waveform value";
  combined.write_json(out(cfg, "metrics/synthesis.json"));
  combined.write_csv(out(cfg, "metrics/synthesis.csv"));
  json rows = json::array();
  for (const auto& r : combined.rows) {
    rows.push_back({{"group", "s" + std::to_string(r.subject) + "_" + r.condition},
                    {"rmse", r.rmse},
                    {"baseline_rmse", r.baseline_rmse.value_or(0.0)}});
  }
  return {{"rows", rows}, {"metrics", out(cfg, "metrics/synthesis.json").string()}};
}

json eval_regress(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  const auto test_ids = as_set(load_or_make_split(cfg).test_ids);
  eval::MetricsReport combined;
  combined.scope = eval::Scope::Acoustic;
  std::size_t beats = 0;
  for (const auto& [key, trials] : groups_of(m)) {
    std::map<int, std::unique_ptr<nn::Model<float>>> models;
    std::map<int, eval::FeaturePredictor> predictors;
    std::map<int, Eigen::RowVectorXd> baselines;
    for (auto k : acoustic::kAllKinds) {
      const int ki = acoustic::kind_index(k);
      const fs::path ckpt = out(cfg, regress_ckpt(key, ki));
      require_file(ckpt, "train-regress");
      models[ki] = std::make_unique<nn::Model<float>>(nn::load_checkpoint<float>(ckpt.string()));
      baselines[ki] = models[ki]->target_norm.mean;
      predictors[ki] = [model = models[ki].get()](const eval::AcousticCase& c) {
        return RowMatrix(nn::predict(*model, nn::Mat<float>(c.input.cast<float>())).cast<double>());
      };
    }
    std::vector<eval::AcousticCase> cases;
    for (const auto& t : select(trials, test_ids)) {
      eval::AcousticCase c{t.id, t.subject, t.condition, {}, {}};
      for (auto k : acoustic::kAllKinds) {
        auto [x, y] = regress_trial(cfg, t.id, acoustic::kind_index(k));
        c.input = std::move(x);
        c.truth[acoustic::kind_index(k)] = std::move(y);
      }
      cases.push_back(std::move(c));
    }
    if (cases.empty()) throw DataError(group_name(key) + ": no test trials");
    const auto rep = eval::evaluate_acoustic(predictors, cases, baselines);
    for (const auto& r : rep.rows) {
      if (r.baseline_rmse && r.rmse < *r.baseline_rmse) ++beats;
    }
    combined.rows.insert(combined.rows.end(), rep.rows.begin(), rep.rows.end());
  }
  combined.metadata = report_metadata(cfg);
  combined.metadata["aggregation"] = "rmse pooled over test frames and dimensions per kind";
  combined.metadata["scale"] = "raw feature units";
  combined.metadata["baseline"] = "per-dimension training-set mean";
  combined.write_json(out(cfg, "metrics/acoustic.json"));
  combined.write_csv(out(cfg, "metrics/acoustic.csv"));
  return {{"rows", combined.rows.size()},
          {"kinds_beating_baseline", beats},
          {"metrics", out(cfg, "metrics/acoustic.json").string()}};
}

json export_spectrogram(const RunConfig& cfg, const RunFilter& filter) {
  const auto m = manifest_for(cfg, filter);
  const auto test_ids = as_set(load_or_make_split(cfg).test_ids);
  json files = json::array();
  for (const auto& [key, trials] : groups_of(m)) {
    const fs::path ckpt = out(cfg, synth_ckpt(key));
    std::optional<nn::Model<float>> model;
    if (fs::exists(ckpt)) model.emplace(nn::load_checkpoint<float>(ckpt.string()));
    for (const auto& t : select(trials, test_ids)) {
      const fs::path prefix = out(cfg, "spectrograms/" + t.id);
      const Signal truth = audio_at_model_rate(cfg, m, t);
      auto f = eval::spectrogram_export(truth, cfg.acoustic_rate_hz, prefix.string() + "_true", cfg.acoustic_fft_size);
      files.push_back(f.pgm.string());
      if (model) {
        const auto s = synth_trial(cfg, m, t);
        const nn::Mat<float> y = nn::predict(*model, nn::Mat<float>(s.input.cast<float>()));
        const Signal pred(y.data(), y.data() + y.size());
        f = eval::spectrogram_export(pred, cfg.acoustic_rate_hz, prefix.string() + "_pred", cfg.acoustic_fft_size);
        files.push_back(f.pgm.string());
      }
    }
  }
  return {{"images", files}};
}

json grad_check(const RunConfig& cfg) {
  const std::uint64_t seed = mix_seed(cfg.seed, kGradCheckStream);
  const auto coords = static_cast<std::size_t>(cfg.gradcheck_coordinates);
  const double eps = cfg.gradcheck_epsilon;
  std::mt19937_64 rng(seed);
  auto random_batch = [&rng](Eigen::Index b, Eigen::Index t, Eigen::Index f) {
    nn::SeqBatch<double> x(b, t, f);
    for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = 2.0 * nn::uniform01(rng) - 1.0;
    return x;
  };

  nn::SynthesisConfig sc = cfg.synth;
  sc.filters1 = 4;
  sc.filters2 = 2;
  auto synth = nn::build_synthesis_model<double>(mix_seed(seed, 1), sc);
  const auto xs = random_batch(2, 5, synth.input_dim);
  const auto ys = random_batch(2, 5 * synth.time_factor, 1);
  const auto rs = nn::finite_diff_grad_check(synth, xs, ys, mix_seed(seed, 2), coords, eps);

  nn::RegressionConfig rcfg;
  rcfg.hidden = 8;
  rcfg.in_dim = 5;
  auto regress = nn::build_regression_model<double>(6, mix_seed(seed, 3), rcfg);
  const auto xr = random_batch(2, 7, rcfg.in_dim);
  const auto yr = random_batch(2, 7, 6);
  const auto rr = nn::finite_diff_grad_check(regress, xr, yr, mix_seed(seed, 4), coords, eps);

  const double worst = std::max(rs.max_rel_err, rr.max_rel_err);
  const bool ok = worst < 1e-4;
  const json result = {{"max_rel_err", worst},
                       {"synthesis", {{"max_rel_err", rs.max_rel_err}, {"coordinates", rs.coordinates}}},
                       {"regression", {{"max_rel_err", rr.max_rel_err}, {"coordinates", rr.coordinates}}},
                       {"tolerance", 1e-4}};
  std::ofstream(out(cfg, "gradcheck.json"), std::ios::binary | std::ios::trunc) << result.dump(2) << '\n';
  json summary = result;
  if (!ok) {
    summary["status"] = "failed";
    summary["exit_code"] = 3;
  }
  return summary;
}

json run_all(const RunConfig& cfg, const RunFilter& filter) {
  json s;
  if (!fs::exists(cfg.data_dir() / "manifest.json")) s["gen-data"] = gen_data(cfg);
  s["preprocess"] = preprocess(cfg, filter);
  s["extract-eeg-feats"] = extract_eeg_feats(cfg, filter);
  s["split"] = split(cfg);
  s["fit-kpca"] = fit_kpca(cfg, filter);
  s["extract-acoustic"] = extract_acoustic(cfg, filter);
  s["train-synth"] = train_synth(cfg, filter);
  s["train-regress"] = train_regress(cfg, filter);
  s["eval-synth"] = eval_synth(cfg, filter);
  s["eval-regress"] = eval_regress(cfg, filter);
  return s;
}

}  // namespace eeg2speech::pipeline
