#include "eeg2speech/nn/gradcheck.hpp"
#include "eeg2speech/nn/layers.hpp"
#include "eeg2speech/nn/optim.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace eeg2speech;
using namespace eeg2speech::nn;

namespace {

SeqBatch<double> random_batch(Eigen::Index b, Eigen::Index t, Eigen::Index f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  SeqBatch<double> x(b, t, f);
  for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = g(rng);
  return x;
}

SeqBatch<double> column(std::initializer_list<double> v) {
  SeqBatch<double> x(1, static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double e : v) x.data(i++, 0) = e;
  return x;
}

}  // namespace

TEST(Upsample, NearestRepeatsFrames) {
  Upsample<double> up(3);
  const auto y = up.forward(column({2.0, -1.0}), false);
  ASSERT_EQ(y.time, 6);
  const std::vector<double> want = {2, 2, 2, -1, -1, -1};
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_EQ(y.data(i, 0), want[static_cast<std::size_t>(i)]);
  EXPECT_THROW(Upsample<double>(0), ConfigError);
}

TEST(Upsample, LinearUsesHalfSampleCenters) {
  Upsample<double> up(2, UpsampleMode::Linear);
  const auto y = up.forward(column({0.0, 1.0}), false);
  const std::vector<double> want = {0.0, 0.25, 0.75, 1.0};
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y.data(i, 0), want[static_cast<std::size_t>(i)]);
  // Backward is the transpose of the interpolation: every input frame receives total weight `factor`.
  SeqBatch<double> ones(1, 4, 1);
  ones.data.setOnes();
  const auto dx = up.backward(ones);
  EXPECT_DOUBLE_EQ(dx.data(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(dx.data(1, 0), 2.0);
}

TEST(Dense, IdentityWeights) {
  std::mt19937_64 rng(1);
  Dense<double> d(3, 3, rng);
  auto ps = d.params();
  ps[0]->value.setIdentity();
  ps[1]->value.setZero();
  const auto x = random_batch(2, 4, 3, 2);
  EXPECT_EQ(d.forward(x, false).data, x.data);
  EXPECT_THROW(d.forward(random_batch(1, 2, 4, 3), false), DataError);
}

TEST(Tcn, KernelOneIdentityIsRelu) {
  std::mt19937_64 rng(1);
  TcnOptions opt;
  opt.kernel_size = 1;
  opt.residual = false;
  TcnBlock<double> tcn(4, 4, opt, rng, "t");
  tcn.weight().value.setIdentity();
  tcn.bias().value.setZero();
  const auto x = random_batch(2, 5, 4, 3);
  EXPECT_EQ(tcn.forward(x, false).data, x.data.cwiseMax(0.0));
  opt.residual = true;
  TcnBlock<double> res(4, 4, opt, rng, "r");
  res.weight().value.setIdentity();
  res.bias().value.setZero();
  EXPECT_EQ(res.forward(x, false).data, (x.data.cwiseMax(0.0) + x.data).eval());
  EXPECT_FALSE(res.has_projection());
}

TEST(Tcn, TapOffsetsAndCausality) {
  std::mt19937_64 rng(1);
  TcnOptions opt;
  opt.kernel_size = 3;
  opt.dilation = 2;
  opt.residual = false;
  TcnBlock<double> tcn(1, 1, opt, rng, "t");
  tcn.weight().value << 1.0, 10.0, 100.0;  // taps read x[t-4], x[t-2], x[t]
  tcn.bias().value.setZero();
  const auto y = tcn.forward(column({1, 0, 0, 0, 0, 0, 0}), false);
  const std::vector<double> want = {100, 0, 10, 0, 1, 0, 0};
  for (Eigen::Index i = 0; i < 7; ++i) EXPECT_EQ(y.data(i, 0), want[static_cast<std::size_t>(i)]);

  TcnBlock<double> wide(3, 5, TcnOptions{3, 1, true}, rng, "w");
  auto x = random_batch(1, 12, 3, 4);
  const auto before = wide.forward(x, false);
  x.data.bottomRows(4).setRandom();
  const auto after = wide.forward(x, false);
  EXPECT_EQ(before.data.topRows(8), after.data.topRows(8));
}

TEST(Gru, ZeroParametersGiveZeroState) {
  std::mt19937_64 rng(1);
  Gru<double> gru(3, 4, rng);
  for (auto* p : gru.params()) p->value.setZero();
  const auto y = gru.forward(random_batch(2, 6, 3, 5), false);
  EXPECT_EQ(y.data.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gru, SingleStepMatchesEquations) {
  std::mt19937_64 rng(7);
  Gru<double> gru(2, 3, rng);
  gru.bias().value.setRandom();
  const auto x = random_batch(1, 1, 2, 6);
  const auto y = gru.forward(x, false);
  // h0 = 0: z = s(xWz + bz), c = tanh(xWh + bh), h1 = z * c.
  const Eigen::RowVectorXd pre = x.data.row(0) * gru.input_kernel().value + gru.bias().value.row(0);
  for (int j = 0; j < 3; ++j) {
    const double z = 1.0 / (1.0 + std::exp(-pre(j)));
    const double c = std::tanh(pre(6 + j));
    EXPECT_NEAR(y.data(0, j), z * c, 1e-14);
  }
}

TEST(Gru, Causality) {
  std::mt19937_64 rng(3);
  Gru<double> gru(3, 4, rng);
  auto x = random_batch(1, 10, 3, 8);
  const auto a = gru.forward(x, false);
  x.data.row(9).setConstant(5.0);
  const auto b = gru.forward(x, false);
  EXPECT_EQ(a.data.topRows(9), b.data.topRows(9));
  EXPECT_NE(a.data.row(9), b.data.row(9));
}

TEST(Dropout, InferenceAndZeroRateAreIdentity) {
  Dropout<double> off(0.0, 1);
  Dropout<double> on(0.2, 1);
  const auto x = random_batch(2, 10, 3, 9);
  EXPECT_EQ(off.forward(x, true).data, x.data);
  EXPECT_EQ(on.forward(x, false).data, x.data);
  EXPECT_EQ(on.backward(x).data, x.data);
  EXPECT_THROW(Dropout<double>(1.0, 1), ConfigError);
  EXPECT_THROW(on.set_rate(-0.1), ConfigError);
}

TEST(Dropout, MonteCarloRateAndScaling) {
  Dropout<double> d(0.2, 42);
  SeqBatch<double> ones(1, 1000, 1000);
  ones.data.setOnes();
  const auto y = d.forward(ones, true);
  const double zeros = static_cast<double>((y.data.array() == 0.0).count()) / static_cast<double>(y.data.size());
  EXPECT_NEAR(zeros, 0.2, 0.01);
  EXPECT_TRUE(((y.data.array() == 0.0) || (y.data.array() == 1.25)).all());
  // Gradient uses the same mask.
  const auto g = d.backward(ones);
  EXPECT_EQ(g.data, y.data);
}

TEST(Mse, ValueMaskAndGradient) {
  auto pred = column({1.0, 2.0});
  const auto target = column({0.0, 2.0});
  const auto r = mse_loss(pred, target);
  EXPECT_DOUBLE_EQ(r.loss, 0.5);
  EXPECT_DOUBLE_EQ(r.grad.data(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(r.grad.data(1, 0), 0.0);

  pred.lengths = {1};
  auto masked_target = target;
  masked_target.data(1, 0) = 100.0;  // past the valid prefix
  EXPECT_DOUBLE_EQ(mse_loss(pred, masked_target).loss, 1.0);

  // Central differences on a random case.
  auto p = random_batch(2, 4, 3, 11);
  p.lengths = {4, 2};
  const auto t = random_batch(2, 4, 3, 12);
  const auto a = mse_loss(p, t);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.data.size(); ++i) {
    const double saved = p.data.data()[i];
    p.data.data()[i] = saved + 1e-6;
    const double up = mse_loss(p, t).loss;
    p.data.data()[i] = saved - 1e-6;
    const double down = mse_loss(p, t).loss;
    p.data.data()[i] = saved;
    worst = std::max(worst, relative_error(a.grad.data.data()[i], (up - down) / 2e-6));
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_THROW(mse_loss(random_batch(1, 2, 1, 1), random_batch(1, 3, 1, 1)), DataError);
}

TEST(Adam, FirstStepAndZeroGradient) {
  Param<double> p("p", 1, 3);
  p.value << 0.5, -0.5, 2.0;
  p.grad << 3.0, -0.01, 0.0;
  AdamState<double> st;
  adam_step<double>({&p}, st);
  // m_hat = g and v_hat = g^2 on the first step, so each coordinate moves by lr * sign(g).
  EXPECT_NEAR(p.value(0, 0), 0.5 - 1e-3, 1e-9);
  EXPECT_NEAR(p.value(0, 1), -0.5 + 1e-3, 1e-9);
  EXPECT_EQ(p.value(0, 2), 2.0);

  Param<double> q("q", 2, 2);
  q.value.setConstant(1.5);
  AdamState<double> st2;
  for (int i = 0; i < 5; ++i) adam_step<double>({&q}, st2);
  EXPECT_EQ(q.value, Mat<double>::Constant(2, 2, 1.5));
}

TEST(GradCheck, EveryLayerTypeInDoublePrecision) {
  std::mt19937_64 rng(5);
  Dense<double> dense(4, 3, rng);
  TcnBlock<double> tcn_proj(3, 5, TcnOptions{3, 2, true}, rng, "tp");
  TcnBlock<double> tcn_id(4, 4, TcnOptions{3, 1, true}, rng, "ti");
  Gru<double> gru(3, 4, rng);
  Upsample<double> nearest(3), linear(3, UpsampleMode::Linear);
  Dropout<double> drop(0.2, 1);
  EXPECT_LT(layer_grad_check(dense, random_batch(2, 5, 4, 1), 1).max_rel_err, 1e-4);
  EXPECT_LT(layer_grad_check(tcn_proj, random_batch(2, 7, 3, 2), 2).max_rel_err, 1e-4);
  EXPECT_LT(layer_grad_check(tcn_id, random_batch(1, 6, 4, 3), 3).max_rel_err, 1e-4);
  EXPECT_LT(layer_grad_check(gru, random_batch(2, 6, 3, 4), 4).max_rel_err, 1e-4);
  EXPECT_LT(layer_grad_check(nearest, random_batch(2, 4, 2, 5), 5).max_rel_err, 1e-4);
  EXPECT_LT(layer_grad_check(linear, random_batch(2, 4, 2, 6), 6).max_rel_err, 1e-4);
  EXPECT_LT(layer_grad_check(drop, random_batch(2, 4, 2, 7), 7).max_rel_err, 1e-4);
}

TEST(GradCheck, DetectsAWrongGradient) {
  // A layer whose backward is off by 10% must fail the check.
  struct Scaled final : Layer<double> {
    SeqBatch<double> forward(const SeqBatch<double>& x, bool) override {
      auto y = x;
      y.data *= 2.0;
      return y;
    }
    SeqBatch<double> backward(const SeqBatch<double>& g) override {
      auto d = g;
      d.data *= 2.2;
      return d;
    }
    std::string name() const override { return "scaled"; }
  } bad;
  EXPECT_GT(layer_grad_check(bad, random_batch(1, 3, 2, 1), 1).max_rel_err, 0.05);
}

TEST(Sequential, ParamsAndZeroGrad) {
  std::mt19937_64 rng(2);
  Sequential<double> net;
  net.add(std::make_unique<Dense<double>>(2, 3, rng));
  net.add(std::make_unique<Dense<double>>(3, 1, rng));
  EXPECT_EQ(net.params().size(), 4u);
  const auto x = random_batch(1, 3, 2, 3);
  const auto y = net.forward(x, true);
  net.backward(y);
  EXPECT_GT(net.params()[0]->grad.cwiseAbs().maxCoeff(), 0.0);
  net.zero_grad();
  for (auto* p : net.params()) EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0);
}
