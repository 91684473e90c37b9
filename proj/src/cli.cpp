#include "eeg2speech/cli.hpp"

#include "eeg2speech/acoustic.hpp"
#include "eeg2speech/pipeline.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace eeg2speech::cli {

namespace fs = std::filesystem;

fs::path RunConfig::data_dir() const { return data_root.empty() ? fs::path(out_dir) / "data" : fs::path(data_root); }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": '" + v + "' is not a valid number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

/// One config key: how to print it and how to assign it.
struct Field {
  std::string section, key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

Field int_field(std::string sec, std::string key, int RunConfig::*m) {
  const std::string full = sec + "." + key;
  return {sec, key, [m](const RunConfig& c) { return std::to_string(c.*m); },
          [m, full](RunConfig& c, const std::string& v) { c.*m = parse_number<int>(full, v); }};
}

Field dbl_field(std::string sec, std::string key, double RunConfig::*m) {
  const std::string full = sec + "." + key;
  return {sec, key, [m](const RunConfig& c) { return fmt_double(c.*m); },
          [m, full](RunConfig& c, const std::string& v) { c.*m = parse_number<double>(full, v); }};
}

Field bool_field(std::string sec, std::string key, bool RunConfig::*m) {
  const std::string full = sec + "." + key;
  return {sec, key, [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); },
          [m, full](RunConfig& c, const std::string& v) { c.*m = parse_bool(full, v); }};
}

/// Field on a nested struct member: `ref` returns a reference into the config.
template <typename T, typename Ref>
Field nested(std::string sec, std::string key, Ref ref) {
  const std::string full = sec + "." + key;
  Field f{sec, key, nullptr, nullptr};
  if constexpr (std::is_same_v<T, bool>) {
    f.get = [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); };
    f.set = [ref, full](RunConfig& c, const std::string& v) { ref(c) = parse_bool(full, v); };
  } else if constexpr (std::is_same_v<T, double>) {
    f.get = [ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); };
    f.set = [ref, full](RunConfig& c, const std::string& v) { ref(c) = parse_number<double>(full, v); };
  } else {
    f.get = [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); };
    f.set = [ref, full](RunConfig& c, const std::string& v) { ref(c) = parse_number<T>(full, v); };
  }
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"paths", "data_root", [](const RunConfig& c) { return c.data_root; },
                 [](RunConfig& c, const std::string& v) { c.data_root = v; }});
    f.push_back({"paths", "out_dir", [](const RunConfig& c) { return c.out_dir; },
                 [](RunConfig& c, const std::string& v) { c.out_dir = v; }});
    f.push_back(nested<std::uint64_t>("run", "seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));

    f.push_back(int_field("run", "log_every", &RunConfig::log_every));
    f.push_back(int_field("data", "n_trials", &RunConfig::n_trials));
    f.push_back(dbl_field("data", "duration_s", &RunConfig::duration_s));
    f.push_back(int_field("data", "n_subjects", &RunConfig::n_subjects));
    f.push_back({"data", "conditions",
                 [](const RunConfig& c) {
                   std::string s;
                   for (auto cond : c.conditions) s += (s.empty() ? "" : ",") + dataio::to_string(cond);
                   return s;
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.conditions.clear();
                   std::stringstream ss(v);
                   std::string item;
                   while (std::getline(ss, item, ',')) {
                     try {
                       c.conditions.push_back(dataio::parse_condition(trim(item)));
                     } catch (const std::exception&) {
                       throw ConfigError("data.conditions: unknown condition '" + trim(item) + "'");
                     }
                   }
                 }});
    f.push_back(int_field("data", "audio_rate_hz", &RunConfig::audio_rate_hz));

    using P = eeg::PreprocessOptions;
    auto pp = [](auto member) { return [member](RunConfig& c) -> auto& { return c.preprocess.*member; }; };
    f.push_back(nested<int>("preprocess", "bandpass_order", pp(&P::bandpass_order)));
    f.push_back(nested<double>("preprocess", "bandpass_lo_hz", pp(&P::bandpass_lo_hz)));
    f.push_back(nested<double>("preprocess", "bandpass_hi_hz", pp(&P::bandpass_hi_hz)));
    f.push_back(nested<double>("preprocess", "notch_hz", pp(&P::notch_hz)));
    f.push_back(nested<double>("preprocess", "notch_q", pp(&P::notch_q)));
    f.push_back(nested<bool>("preprocess", "zero_phase", pp(&P::zero_phase)));
    f.push_back(nested<bool>("preprocess", "ica", pp(&P::ica)));
    f.push_back(nested<double>("preprocess", "kurtosis_threshold", pp(&P::kurtosis_threshold)));
    f.push_back(nested<int>("preprocess", "ica_max_iter", pp(&P::ica_max_iter)));
    f.push_back(nested<double>("preprocess", "ica_tol", pp(&P::ica_tol)));
    f.push_back(nested<bool>("preprocess", "zscore", pp(&P::zscore)));

    f.push_back(dbl_field("features", "frame_rate_hz", &RunConfig::frame_rate_hz));
    f.push_back(int_field("features", "stat_window", &RunConfig::stat_window));

    f.push_back(int_field("kpca", "out_dim", &RunConfig::kpca_dim));
    f.push_back(int_field("kpca", "degree", &RunConfig::kpca_degree));
    f.push_back(dbl_field("kpca", "gamma", &RunConfig::kpca_gamma));
    f.push_back(dbl_field("kpca", "coef0", &RunConfig::kpca_coef0));
    f.push_back(bool_field("kpca", "per_subject", &RunConfig::kpca_per_subject));
    f.push_back(int_field("kpca", "max_train_frames", &RunConfig::kpca_max_train_frames));

    f.push_back(int_field("acoustic", "sample_rate_hz", &RunConfig::acoustic_rate_hz));
    f.push_back(int_field("acoustic", "fft_size", &RunConfig::acoustic_fft_size));

    f.push_back(nested<double>("split", "train", [](RunConfig& c) -> double& { return c.split.train; }));
    f.push_back(nested<double>("split", "val", [](RunConfig& c) -> double& { return c.split.val; }));
    f.push_back(nested<double>("split", "test", [](RunConfig& c) -> double& { return c.split.test; }));

    using S = nn::SynthesisConfig;
    auto sy = [](auto member) { return [member](RunConfig& c) -> auto& { return c.synth.*member; }; };
    f.push_back(nested<int>("synthesis", "filters1", sy(&S::filters1)));
    f.push_back(nested<int>("synthesis", "filters2", sy(&S::filters2)));
    f.push_back(nested<int>("synthesis", "kernel_size", [](RunConfig& c) -> int& { return c.synth.tcn.kernel_size; }));
    f.push_back(nested<int>("synthesis", "dilation", [](RunConfig& c) -> int& { return c.synth.tcn.dilation; }));
    f.push_back(nested<bool>("synthesis", "residual", [](RunConfig& c) -> bool& { return c.synth.tcn.residual; }));
    f.push_back(nested<int>("synthesis", "up1", sy(&S::up1)));
    f.push_back(nested<int>("synthesis", "up2", sy(&S::up2)));
    f.push_back(nested<double>("synthesis", "dropout", sy(&S::dropout)));
    f.push_back({"synthesis", "upsample",
                 [](const RunConfig& c) {
                   return std::string(c.synth.upsample == nn::UpsampleMode::Nearest ? "nearest" : "linear");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "nearest") {
                     c.synth.upsample = nn::UpsampleMode::Nearest;
                   } else if (v == "linear") {
                     c.synth.upsample = nn::UpsampleMode::Linear;
                   } else {
                     throw ConfigError("synthesis.upsample: expected nearest or linear, got '" + v + "'");
                   }
                 }});
    f.push_back(nested<bool>("synthesis", "head_before_final_upsample", sy(&S::head_before_final_upsample)));
    using T = nn::TrainConfig;
    auto st = [](auto member) { return [member](RunConfig& c) -> auto& { return c.synth_train.*member; }; };
    f.push_back(nested<int>("synthesis", "epochs", st(&T::epochs)));
    f.push_back(nested<int>("synthesis", "batch_size", st(&T::batch_size)));
    f.push_back(nested<double>("synthesis", "lr", st(&T::lr)));
    f.push_back(nested<int>("synthesis", "micro_batch", st(&T::micro_batch)));
    f.push_back(nested<bool>("synthesis", "shuffle", st(&T::shuffle)));
    f.push_back(nested<bool>("synthesis", "restore_best_val", st(&T::restore_best_val)));

    f.push_back(nested<int>("regression", "hidden", [](RunConfig& c) -> int& { return c.regress.hidden; }));
    f.push_back(nested<double>("regression", "dropout", [](RunConfig& c) -> double& { return c.regress.dropout; }));
    auto rt = [](auto member) { return [member](RunConfig& c) -> auto& { return c.regress_train.*member; }; };
    f.push_back(nested<int>("regression", "epochs", rt(&T::epochs)));
    f.push_back(nested<int>("regression", "batch_size", rt(&T::batch_size)));
    f.push_back(nested<double>("regression", "lr", rt(&T::lr)));
    f.push_back(nested<int>("regression", "micro_batch", rt(&T::micro_batch)));
    f.push_back(nested<bool>("regression", "shuffle", rt(&T::shuffle)));
    f.push_back(nested<bool>("regression", "restore_best_val", rt(&T::restore_best_val)));

    f.push_back(int_field("gradcheck", "coordinates", &RunConfig::gradcheck_coordinates));
    f.push_back(dbl_field("gradcheck", "epsilon", &RunConfig::gradcheck_epsilon));
    return f;
  }();
  return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

void RunConfig::validate() const {
  require(!out_dir.empty(), "paths.out_dir", "must not be empty");
  require(log_every >= 0, "run.log_every", "must be >= 0");
  require(n_trials >= 1, "data.n_trials", "must be >= 1");
  require(duration_s > 0.0, "data.duration_s", "must be > 0");
  require(n_subjects >= 1, "data.n_subjects", "must be >= 1");
  require(!conditions.empty(), "data.conditions", "must list at least one condition");
  require(audio_rate_hz >= 8000, "data.audio_rate_hz", "must be >= 8000");
  require(preprocess.bandpass_order >= 1 && preprocess.bandpass_order <= 8, "preprocess.bandpass_order",
          "must be in [1, 8]");
  require(preprocess.bandpass_lo_hz > 0.0, "preprocess.bandpass_lo_hz", "must be > 0");
  require(preprocess.bandpass_hi_hz > preprocess.bandpass_lo_hz && preprocess.bandpass_hi_hz < 500.0,
          "preprocess.bandpass_hi_hz", "must be in (bandpass_lo_hz, 500)");
  require(preprocess.notch_hz > 0.0 && preprocess.notch_hz < 500.0, "preprocess.notch_hz", "must be in (0, 500)");
  require(preprocess.notch_q > 0.0, "preprocess.notch_q", "must be > 0");
  require(preprocess.kurtosis_threshold > 0.0, "preprocess.kurtosis_threshold", "must be > 0");
  require(preprocess.ica_max_iter >= 1, "preprocess.ica_max_iter", "must be >= 1");
  require(preprocess.ica_tol > 0.0, "preprocess.ica_tol", "must be > 0");
  require(frame_rate_hz > 0.0 && frame_rate_hz <= 500.0, "features.frame_rate_hz", "must be in (0, 500]");
  require(stat_window >= 0, "features.stat_window", "must be >= 0");
  require(kpca_dim >= 1, "kpca.out_dim", "must be >= 1");
  require(kpca_degree >= 1, "kpca.degree", "must be >= 1");
  require(kpca_gamma > 0.0, "kpca.gamma", "must be > 0");
  require(kpca_max_train_frames > kpca_dim, "kpca.max_train_frames", "must exceed kpca.out_dim");
  require(acoustic_rate_hz >= 1000, "acoustic.sample_rate_hz", "must be >= 1000");
  require(acoustic_fft_size >= 64 && (acoustic_fft_size & (acoustic_fft_size - 1)) == 0, "acoustic.fft_size",
          "must be a power of two >= 64");
  require(split.train > 0.0 && split.val > 0.0 && split.test > 0.0, "split", "ratios must be > 0");
  require(std::abs(split.train + split.val + split.test - 1.0) < 1e-9, "split", "ratios must sum to 1");
  require(synth.filters1 >= 1, "synthesis.filters1", "must be >= 1");
  require(synth.filters2 >= 1, "synthesis.filters2", "must be >= 1");
  require(synth.tcn.kernel_size >= 1, "synthesis.kernel_size", "must be >= 1");
  require(synth.tcn.dilation >= 1, "synthesis.dilation", "must be >= 1");
  require(synth.up1 >= 1, "synthesis.up1", "must be >= 1");
  require(synth.up2 >= 1, "synthesis.up2", "must be >= 1");
  require(synth.dropout >= 0.0 && synth.dropout < 1.0, "synthesis.dropout", "must be in [0, 1)");
  require(synth_train.epochs >= 1, "synthesis.epochs", "must be >= 1");
  require(synth_train.batch_size >= 1, "synthesis.batch_size", "must be >= 1");
  require(synth_train.lr > 0.0, "synthesis.lr", "must be > 0");
  require(synth_train.micro_batch >= 0, "synthesis.micro_batch", "must be >= 0");
  require(regress.hidden >= 1, "regression.hidden", "must be >= 1");
  require(regress.dropout >= 0.0 && regress.dropout < 1.0, "regression.dropout", "must be in [0, 1)");
  require(regress_train.epochs >= 1, "regression.epochs", "must be >= 1");
  require(regress_train.batch_size >= 1, "regression.batch_size", "must be >= 1");
  require(regress_train.lr > 0.0, "regression.lr", "must be > 0");
  require(regress_train.micro_batch >= 0, "regression.micro_batch", "must be >= 0");
  require(gradcheck_coordinates >= 1, "gradcheck.coordinates", "must be >= 1");
  require(gradcheck_epsilon > 0.0, "gradcheck.epsilon", "must be > 0");
}

RunConfig parse_config_text(const std::string& text) {
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.section + "." + f.key] = &f;

  RunConfig c;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = index.find(full);
    if (it == index.end()) throw ConfigError(where + "unknown key '" + full + "'");
    try {
      it->second->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  c.validate();
  return c;
}

RunConfig parse_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

std::string format_sections(const RunConfig& c, bool include_paths) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (!include_paths && f.section == "paths") continue;
    if (f.section != section) {
      if (!out.empty()) out += '\n';
      out += "[" + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

}  // namespace

std::string format_config(const RunConfig& c) { return format_sections(c, true); }
std::string format_config_for_hash(const RunConfig& c) { return format_sections(c, false); }

nlohmann::json run_command(const std::string& command, const RunConfig& config, const RunFilter& filter) {
  config.validate();
  fs::create_directories(config.out_path());
  {
    std::ofstream echo(config.out_path() / "config.resolved.ini", std::ios::binary | std::ios::trunc);
    echo << format_config(config);
  }
  using namespace pipeline;
  nlohmann::json summary;
  if (command == "gen-data") {
    summary = gen_data(config);
  } else if (command == "preprocess") {
    summary = preprocess(config, filter);
  } else if (command == "extract-eeg-feats") {
    summary = extract_eeg_feats(config, filter);
  } else if (command == "fit-kpca") {
    summary = fit_kpca(config, filter);
  } else if (command == "extract-acoustic") {
    summary = extract_acoustic(config, filter);
  } else if (command == "split") {
    summary = split(config);
  } else if (command == "train-synth") {
    summary = train_synth(config, filter);
  } else if (command == "train-regress") {
    summary = train_regress(config, filter);
  } else if (command == "eval-synth") {
    summary = eval_synth(config, filter);
  } else if (command == "eval-regress") {
    summary = eval_regress(config, filter);
  } else if (command == "export-spectrogram") {
    summary = export_spectrogram(config, filter);
  } else if (command == "grad-check") {
    summary = grad_check(config);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  nlohmann::json out = {{"command", command}, {"status", "ok"}};
  out.update(summary);
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EEG-to-speech pipeline driver", "eeg2speech"};
  std::string command, config_path, out_dir, condition, kind;
  std::optional<std::uint64_t> seed;
  std::optional<int> subject;
  std::string command_help = "one of:";
  for (const char* c : kCommands) command_help += std::string(" ") + c;
  app.add_option("command", command, command_help)->required();
  app.add_option("--config", config_path, "config file (key = value sections)");
  app.add_option("--seed", seed, "root seed, overrides run.seed");
  app.add_option("--out", out_dir, "output directory, overrides paths.out_dir");
  app.add_option("--subject", subject, "restrict to one subject");
  app.add_option("--condition", condition, "restrict to spoken or listen");
  app.add_option("--kind", kind, "restrict to one acoustic kind (f1..f16 or name)");

  auto fail = [&](int code, const std::string& msg) {
    err << "eeg2speech: " << msg << '\n';
    out << nlohmann::json{{"command", command}, {"status", "error"}, {"exit_code", code}, {"message", msg}}.dump()
        << '\n';
    return code;
  };

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(1, e.what());
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    RunFilter filter;
    filter.subject = subject;
    if (!condition.empty()) {
      try {
        filter.condition = dataio::parse_condition(condition);
      } catch (const std::exception&) {
        throw ConfigError("--condition must be spoken or listen");
      }
    }
    if (!kind.empty()) {
      try {
        filter.kind = acoustic::kind_index(acoustic::parse_kind(kind));
      } catch (const std::exception&) {
        throw ConfigError("--kind must be f1..f16 or a kind name");
      }
    }
    const auto summary = run_command(command, cfg, filter);
    out << summary.dump() << '\n';
    return summary.value("exit_code", 0);
  } catch (const ConfigError& e) {
    return fail(1, e.what());
  } catch (const NumericError& e) {
    return fail(3, e.what());
  } catch (const DataError& e) {
    return fail(2, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(2, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(2, e.what());
  }
}

}  // namespace eeg2speech::cli
