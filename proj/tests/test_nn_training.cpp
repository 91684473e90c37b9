#include "eeg2speech/nn/checkpoint.hpp"
#include "eeg2speech/nn/models.hpp"
#include "eeg2speech/nn/train.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <random>

#include "test_support.hpp"

using namespace eeg2speech;
using namespace eeg2speech::nn;
namespace ts = testsupport;

namespace {

template <typename S>
std::vector<SeqPair<S>> regression_pairs(int n, int in_dim, int out_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<SeqPair<S>> out;
  for (int i = 0; i < n; ++i) {
    const int t = 6 + i % 5;
    SeqPair<S> p;
    p.input = Mat<S>(t, in_dim);
    for (Eigen::Index k = 0; k < p.input.size(); ++k) p.input.data()[k] = static_cast<S>(g(rng));
    // Target: running sum of the first input feature, a causal dependency a GRU can learn.
    p.target = Mat<S>::Zero(t, out_dim);
    S acc = 0;
    for (int k = 0; k < t; ++k) {
      acc += p.input(k, 0);
      p.target.row(k).setConstant(static_cast<S>(0.3) * acc + static_cast<S>(2.0));
    }
    out.push_back(std::move(p));
  }
  return out;
}

SynthesisConfig tiny_synthesis() {
  SynthesisConfig c;
  c.in_channels = 3;
  c.filters1 = 4;
  c.filters2 = 2;
  return c;
}

RegressionConfig tiny_regression() {
  RegressionConfig c;
  c.in_dim = 3;
  c.hidden = 5;
  return c;
}

}  // namespace

TEST(Architecture, SynthesisTimeFactorForRandomLengths) {
  auto m = build_synthesis_model<float>(1);
  EXPECT_EQ(m.input_dim, 31);
  EXPECT_EQ(m.output_dim, 1);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index t = 1 + static_cast<Eigen::Index>(rng() % 40);
    Mat<float> x = Mat<float>::Random(t, 31);
    const auto y = predict(m, x);
    EXPECT_EQ(y.rows(), 15 * t);
    EXPECT_EQ(y.cols(), 1);
  }
}

TEST(Architecture, SynthesisParameterShapes) {
  auto m = build_synthesis_model<double>(1);
  const auto ps = m.params();
  // tcn1: kernel 3 x 31 -> 256 plus 1x1 projection; tcn2: kernel 3 x 256 -> 32 plus projection; head 32 -> 1.
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes = {
      {93, 256}, {1, 256}, {31, 256}, {1, 256}, {768, 32}, {1, 32}, {256, 32}, {1, 32}, {32, 1}, {1, 1}};
  ASSERT_EQ(ps.size(), shapes.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(ps[i]->value.rows(), shapes[i].first) << ps[i]->name;
    EXPECT_EQ(ps[i]->value.cols(), shapes[i].second) << ps[i]->name;
  }
  const std::size_t by_hand = (93 * 256 + 256 + 31 * 256 + 256) + (768 * 32 + 32 + 256 * 32 + 32) + 33;
  EXPECT_EQ(m.parameter_count(), by_hand);
  EXPECT_EQ(synthesis_parameter_count({}), by_hand);
  ASSERT_NE(m.find_layer<Dropout<double>>(), nullptr);
  EXPECT_DOUBLE_EQ(m.find_layer<Dropout<double>>()->rate(), 0.2);
}

TEST(Architecture, RegressionHeadsForEveryKindWidth) {
  for (int out : {1, 2, 6, 7, 12, 128, 384}) {
    auto m = build_regression_model<float>(out, 3);
    ASSERT_NE(m.find_layer<Gru<float>>(), nullptr);
    EXPECT_EQ(m.find_layer<Gru<float>>()->hidden(), 128);
    EXPECT_EQ(m.find_layer<Gru<float>>()->input_kernel().value.rows(), 30);
    const Mat<float> x = Mat<float>::Random(9, 30);
    const auto y = predict(m, x);
    EXPECT_EQ(y.rows(), 9);
    EXPECT_EQ(y.cols(), out);
  }
  EXPECT_THROW(build_regression_model<float>(5, 1), ConfigError);
  auto m = build_regression_model<float>(12, 1);
  const Mat<float> wrong = Mat<float>::Random(4, 31);
  EXPECT_THROW(predict(m, wrong), DataError);
}

TEST(Training, OneEpochReducesLoss) {
  auto m = build_regression_model<double>(2, 5, tiny_regression());
  const auto data = regression_pairs<double>(12, 3, 2, 1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  cfg.lr = 1e-2;
  cfg.dropout = 0.0;
  const auto h = train(m, data, {}, cfg);
  ASSERT_EQ(h.records.size(), 30u);
  EXPECT_LT(h.records.back().train_loss, h.records.front().train_loss);
  EXPECT_EQ(h.best_epoch, 30);
}

TEST(Training, SameSeedSameCurve) {
  const auto data = regression_pairs<float>(10, 3, 1, 2);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 3;
  cfg.seed = 9;
  auto a = build_regression_model<float>(1, 4, tiny_regression());
  auto b = build_regression_model<float>(1, 4, tiny_regression());
  const auto ha = train(a, data, {}, cfg), hb = train(b, data, {}, cfg);
  for (std::size_t i = 0; i < ha.records.size(); ++i) EXPECT_EQ(ha.records[i].train_loss, hb.records[i].train_loss);
  for (std::size_t i = 0; i < a.params().size(); ++i) EXPECT_EQ(a.params()[i]->value, b.params()[i]->value);
  cfg.seed = 10;
  auto c = build_regression_model<float>(1, 4, tiny_regression());
  const auto hc = train(c, data, {}, cfg);
  EXPECT_NE(hc.records.back().train_loss, ha.records.back().train_loss);
}

TEST(Training, MicroBatchesMatchFullBatch) {
  const auto data = regression_pairs<double>(9, 3, 2, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.dropout = 0.0;
  auto full = build_regression_model<double>(2, 6, tiny_regression());
  auto micro = build_regression_model<double>(2, 6, tiny_regression());
  train(full, data, {}, cfg);
  cfg.micro_batch = 1;
  train(micro, data, {}, cfg);
  for (std::size_t i = 0; i < full.params().size(); ++i) {
    EXPECT_LT((full.params()[i]->value - micro.params()[i]->value).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Training, BestValidationEpochIsRestored) {
  const auto data = regression_pairs<double>(8, 3, 1, 4);
  const auto val = regression_pairs<double>(3, 3, 1, 5);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 4;
  cfg.lr = 3e-2;
  auto m = build_regression_model<double>(1, 7, tiny_regression());
  const auto h = train(m, data, val, cfg);
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  for (const auto& r : h.records) {
    if (r.val_loss < best) {
      best = r.val_loss;
      best_epoch = r.epoch;
    }
  }
  EXPECT_EQ(h.best_epoch, best_epoch);
  EXPECT_NEAR(detail::eval_loss(m, val, 0), best, 1e-12);
}

TEST(Training, DivergenceRaisesNumericError) {
  auto data = regression_pairs<float>(4, 3, 1, 6);
  data[1].target(2, 0) = std::numeric_limits<float>::quiet_NaN();
  auto m = build_regression_model<float>(1, 1, tiny_regression());
  TrainConfig cfg;
  cfg.epochs = 2;
  EXPECT_THROW(train(m, data, {}, cfg), NumericError);
  cfg.lr = -1.0;
  EXPECT_THROW(train(m, data, {}, cfg), ConfigError);
}

TEST(Training, ShapeContractOnPairs) {
  auto m = build_synthesis_model<float>(1, tiny_synthesis());
  SeqPair<float> bad;
  bad.input = Mat<float>::Zero(4, 3);
  bad.target = Mat<float>::Zero(59, 1);
  EXPECT_THROW(train(m, {bad}, {}, TrainConfig{}), DataError);
}

TEST(Training, EpochBatchesAreBucketedAndSeeded) {
  const std::vector<Eigen::Index> lengths = {5, 9, 1, 7, 3, 8, 2, 6, 4};
  const auto a = epoch_batches(lengths, 3, true, 11);
  const auto b = epoch_batches(lengths, 3, true, 11);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 3u);
  for (const auto& batch : a) {
    Eigen::Index lo = 100, hi = 0;
    for (auto i : batch) {
      lo = std::min(lo, lengths[i]);
      hi = std::max(hi, lengths[i]);
    }
    EXPECT_EQ(hi - lo, 2);  // three consecutive lengths per bucket
  }
}

TEST(Checkpoint, RoundTripAcrossPrecisions) {
  const auto dir = ts::temp_dir("ckpt");
  auto m = build_synthesis_model<float>(12, tiny_synthesis());
  const auto data = [] {
    SeqPair<float> p;
    p.input = Mat<float>::Random(6, 3);
    p.target = Mat<float>::Random(90, 1);
    return std::vector<SeqPair<float>>{p};
  }();
  TrainConfig cfg;
  cfg.epochs = 2;
  train(m, data, {}, cfg);
  save_checkpoint(m, (dir / "m.ckpt").string());
  auto back = load_checkpoint<float>((dir / "m.ckpt").string());
  EXPECT_EQ(back.kind, "synthesis");
  EXPECT_EQ(back.seed, 12u);
  EXPECT_EQ(predict(back, data[0].input), predict(m, data[0].input));
  auto wide = load_checkpoint<double>((dir / "m.ckpt").string());
  const Mat<double> x64 = data[0].input.cast<double>();
  const Mat<float> y64 = predict(wide, x64).cast<float>();
  EXPECT_LT((y64 - predict(m, data[0].input)).cwiseAbs().maxCoeff(), 1e-5);

  save_checkpoint(back, (dir / "again.ckpt").string());
  std::ifstream f1(dir / "m.ckpt", std::ios::binary), f2(dir / "again.ckpt", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(f1), {}), std::string(std::istreambuf_iterator<char>(f2), {}));

  auto reg = build_regression_model<double>(7, 3, tiny_regression());
  save_checkpoint(reg, (dir / "r.ckpt").string());
  const auto rb = load_checkpoint<double>((dir / "r.ckpt").string());
  EXPECT_EQ(rb.output_dim, 7);
}

TEST(Checkpoint, RejectsForeignFiles) {
  const auto dir = ts::temp_dir("ckpt_bad");
  {
    std::ofstream f(dir / "junk.ckpt", std::ios::binary);
    f << "NOTACKPTxxxxxxxxxxxxxxxxxxx";
  }
  EXPECT_THROW(load_checkpoint<float>((dir / "junk.ckpt").string()), DataError);
  EXPECT_THROW(load_checkpoint<float>((dir / "none.ckpt").string()), DataError);
  auto m = build_regression_model<float>(1, 3, tiny_regression());
  save_checkpoint(m, (dir / "ok.ckpt").string());
  std::ifstream in(dir / "ok.ckpt", std::ios::binary);
  std::string bytes(std::istreambuf_iterator<char>(in), {});
  bytes.resize(bytes.size() / 2);
  std::ofstream(dir / "cut.ckpt", std::ios::binary) << bytes;
  EXPECT_THROW(load_checkpoint<float>((dir / "cut.ckpt").string()), DataError);
}

TEST(History, CsvHeaderRecordsConfig) {
  const auto dir = ts::temp_dir("history");
  TrainHistory h;
  h.config.epochs = 500;
  h.config.batch_size = 100;
  h.best_epoch = 3;
  h.records.push_back({1, 0.5, 0.6, std::numeric_limits<double>::quiet_NaN()});
  h.write_csv((dir / "h.csv").string());
  std::ifstream f(dir / "h.csv");
  std::string first, second, third;
  std::getline(f, first);
  std::getline(f, second);
  std::getline(f, third);
  EXPECT_NE(first.find("epochs=500"), std::string::npos);
  EXPECT_NE(first.find("batch_size=100"), std::string::npos);
  EXPECT_NE(first.find("best_epoch=3"), std::string::npos);
  EXPECT_EQ(second, "epoch,train_loss,val_loss,eval_train_loss");
  EXPECT_EQ(third, "1,0.5,0.6,nan");
}

TEST(Normalizer, FitApplyInvert) {
  Mat<double> a(3, 2), b(1, 2);
  a << 1, 5, 2, 5, 3, 5;
  b << 4, 5;
  const auto n = Normalizer::fit<double>({&a, &b});
  EXPECT_NEAR(n.mean(0), 2.5, 1e-12);
  EXPECT_NEAR(n.scale(0), std::sqrt(1.25), 1e-12);
  EXPECT_EQ(n.scale(1), 1.0);  // constant column
  EXPECT_LT((n.invert<double>(n.apply<double>(a)) - a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(Normalizer{}.identity());
}
