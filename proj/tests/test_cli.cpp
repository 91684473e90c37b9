#include "eeg2speech/cli.hpp"
#include "eeg2speech/common.hpp"
#include "eeg2speech/dataio.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace eeg2speech;
using cli::RunConfig;

namespace {

struct CliResult {
  int code = -1;
  nlohmann::json summary;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run_cli(args, out, err);
  r.err = err.str();
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1) << text;
  r.summary = nlohmann::json::parse(text);
  return r;
}

std::string write_config(const std::filesystem::path& dir, const std::string& text) {
  const auto p = dir / "run.ini";
  std::ofstream(p) << text;
  return p.string();
}

std::string config_error(const std::string& text) {
  try {
    (void)cli::parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

// Small enough for a unit test: 10 short trials, tiny networks.
const char* kTinyRun = R"(
[data]
n_trials = 10
duration_s = 1.0

[synthesis]
filters1 = 8
filters2 = 4
epochs = 3
batch_size = 4

[regression]
hidden = 8
epochs = 2
batch_size = 4
)";

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const RunConfig c = cli::parse_config_text("");
  EXPECT_EQ(c.synth_train.epochs, 5000);
  EXPECT_EQ(c.synth_train.batch_size, 100);
  EXPECT_DOUBLE_EQ(c.synth_train.lr, 1e-3);
  EXPECT_EQ(c.synth.filters1, 256);
  EXPECT_EQ(c.synth.filters2, 32);
  EXPECT_DOUBLE_EQ(c.synth.dropout, 0.2);
  EXPECT_EQ(c.regress.hidden, 128);
  EXPECT_EQ(c.regress_train.epochs, 500);
  EXPECT_EQ(c.kpca_dim, 30);
  EXPECT_EQ(c.kpca_degree, 3);
  EXPECT_DOUBLE_EQ(c.kpca_gamma, 1.0 / 155.0);
  EXPECT_DOUBLE_EQ(c.kpca_coef0, 1.0);
  EXPECT_DOUBLE_EQ(c.frame_rate_hz, 31.0);
  EXPECT_EQ(c.acoustic_rate_hz, 15000);
  EXPECT_DOUBLE_EQ(c.split.train, 0.8);
  EXPECT_DOUBLE_EQ(c.split.val, 0.1);
  EXPECT_DOUBLE_EQ(c.split.test, 0.1);
  EXPECT_DOUBLE_EQ(c.preprocess.bandpass_lo_hz, 0.1);
  EXPECT_DOUBLE_EQ(c.preprocess.bandpass_hi_hz, 70.0);
  EXPECT_DOUBLE_EQ(c.preprocess.notch_hz, 60.0);
  EXPECT_EQ(c.n_trials, 50);
  // Comments and blank lines alone change nothing.
  EXPECT_EQ(cli::format_config(cli::parse_config_text("# nothing\n\n; still nothing\n")), cli::format_config(c));
}

TEST(Config, ValuesOverrideDefaults) {
  const RunConfig c = cli::parse_config_text(
      "[synthesis]\nepochs = 12\nlr = 0.01\nupsample = linear\n[kpca]\nper_subject = false\n"
      "[data]\nconditions = spoken, listen\n");
  EXPECT_EQ(c.synth_train.epochs, 12);
  EXPECT_DOUBLE_EQ(c.synth_train.lr, 0.01);
  EXPECT_EQ(c.synth.upsample, nn::UpsampleMode::Linear);
  EXPECT_FALSE(c.kpca_per_subject);
  ASSERT_EQ(c.conditions.size(), 2u);
  EXPECT_EQ(c.conditions[1], dataio::Condition::Listen);
}

TEST(Config, RangeErrorNamesTheKey) {
  const std::string msg = config_error("[synthesis]\nepochs = -1\n");
  EXPECT_NE(msg.find("synthesis.epochs"), std::string::npos) << msg;
  EXPECT_NE(config_error("[split]\ntrain = 0.7\n").find("split"), std::string::npos);
  EXPECT_NE(config_error("[acoustic]\nfft_size = 1000\n").find("acoustic.fft_size"), std::string::npos);
}

TEST(Config, SyntaxErrorsCarryLineNumbers) {
  EXPECT_NE(config_error("[run]\nseed = 1\nbogus = 3\n").find("line 3"), std::string::npos);
  EXPECT_NE(config_error("[run]\nseed = 1\nbogus = 3\n").find("run.bogus"), std::string::npos);
  EXPECT_NE(config_error("\n[run\n").find("line 2"), std::string::npos);
  EXPECT_NE(config_error("[run]\nseed\n").find("line 2"), std::string::npos);
  EXPECT_NE(config_error("[synthesis]\n\nepochs = many\n").find("line 3"), std::string::npos);
  EXPECT_NE(config_error("[kpca]\nper_subject = maybe\n").find("line 2"), std::string::npos);
  EXPECT_FALSE(config_error("[synthesis]\nupsample = cubic\n").empty());
}

TEST(Config, EchoIsAFixpoint) {
  RunConfig c = cli::parse_config_text("[run]\nseed = 77\n[kpca]\ngamma = 0.0123456789\n[synthesis]\nlr = 3e-4\n");
  const std::string once = cli::format_config(c);
  const RunConfig again = cli::parse_config_text(once);
  EXPECT_EQ(cli::format_config(again), once);
  EXPECT_EQ(again.seed, 77u);
  EXPECT_DOUBLE_EQ(again.kpca_gamma, 0.0123456789);
  EXPECT_DOUBLE_EQ(again.synth_train.lr, 3e-4);
  // The default gamma is 1/155 exactly, which only survives with enough digits.
  EXPECT_EQ(cli::parse_config_text(cli::format_config(RunConfig{})).kpca_gamma, 1.0 / 155.0);
}

TEST(Config, HashTextIgnoresPaths) {
  RunConfig a, b;
  b.out_dir = "elsewhere";
  b.data_root = "/data";
  EXPECT_EQ(cli::format_config_for_hash(a), cli::format_config_for_hash(b));
  EXPECT_NE(cli::format_config(a), cli::format_config(b));
  b.seed = 1;
  EXPECT_NE(cli::format_config_for_hash(a), cli::format_config_for_hash(b));
}

TEST(Cli, UnknownCommandIsUsageError) {
  const auto dir = testsupport::temp_dir("cli_unknown");
  const auto r = run({"frobnicate", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.summary["status"], "error");
  EXPECT_EQ(r.summary["exit_code"], 1);
  EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
}

TEST(Cli, BadConfigIsUsageError) {
  const auto dir = testsupport::temp_dir("cli_badcfg");
  const auto cfg = write_config(dir, "[synthesis]\nepochs = -1\n");
  const auto r = run({"split", "--config", cfg, "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.summary["message"].get<std::string>().find("synthesis.epochs"), std::string::npos);
  EXPECT_EQ(run({"split", "--config", (dir / "absent.ini").string()}).code, 1);
  EXPECT_EQ(run({"split", "--seed", "x"}).code, 1);
  EXPECT_EQ(run({"split", "--out", dir.string(), "--condition", "whisper"}).code, 1);
}

TEST(Cli, MissingManifestIsDataError) {
  const auto dir = testsupport::temp_dir("cli_nodata");
  const auto r = run({"preprocess", "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.summary["exit_code"], 2);
}

TEST(Cli, GradCheckPasses) {
  const auto dir = testsupport::temp_dir("cli_grad");
  const auto r = run({"grad-check", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.summary.dump();
  EXPECT_EQ(r.summary["status"], "ok");
  EXPECT_LT(r.summary["max_rel_err"].get<double>(), 1e-4);
  EXPECT_TRUE(std::filesystem::exists(dir / "gradcheck.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "config.resolved.ini"));
}

TEST(Cli, SplitUsesDefaultRatios) {
  const auto dir = testsupport::temp_dir("cli_split");
  ASSERT_EQ(run({"gen-data", "--out", dir.string(), "--seed", "4"}).code, 0);
  const auto r = run({"split", "--out", dir.string(), "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.summary.dump();
  EXPECT_EQ(r.summary["train"], 40);
  EXPECT_EQ(r.summary["val"], 5);
  EXPECT_EQ(r.summary["test"], 5);
  const auto s = dataio::load_split(dir / "split.json");
  EXPECT_EQ(s.train_ids.size(), 40u);
  EXPECT_EQ(s.val_ids.size(), 5u);
  EXPECT_EQ(s.test_ids.size(), 5u);
  EXPECT_EQ(s.seed, 4u);
}

TEST(Cli, TrainingRecordsEpochsInHistoryHeader) {
  const auto dir = testsupport::temp_dir("cli_train");
  const auto cfg = write_config(dir, kTinyRun);
  for (const char* cmd : {"gen-data", "preprocess", "extract-eeg-feats", "split", "fit-kpca", "extract-acoustic"}) {
    const auto r = run({cmd, "--config", cfg, "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.summary.dump();
  }
  const auto r = run({"train-synth", "--config", cfg, "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.summary.dump();
  std::ifstream hist(dir / "models" / "synth_s1_spoken.history.csv");
  std::string header;
  std::getline(hist, header);
  EXPECT_NE(header.find("epochs=3 "), std::string::npos) << header;
  EXPECT_NE(header.find("batch_size=4 "), std::string::npos) << header;
  // Without an override the resolved config carries the full schedule.
  const auto resolved = cli::parse_config(dir / "config.resolved.ini");
  EXPECT_EQ(resolved.synth_train.epochs, 3);
  EXPECT_EQ(RunConfig{}.synth_train.epochs, 5000);

  // A step size this large sends the loss to infinity within the first epochs.
  const auto bad = write_config(dir, std::string(kTinyRun) + "lr = 1e30\n[synthesis]\nlr = 1e30\n");
  const auto diverged = run({"train-synth", "--config", bad, "--out", dir.string()});
  EXPECT_EQ(diverged.code, 3) << diverged.summary.dump();
}
