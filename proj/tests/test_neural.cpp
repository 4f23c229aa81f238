#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "extrap/dataset.hpp"
#include "extrap/neural.hpp"
#include "oracles.hpp"

using namespace extrap;

namespace {

MlpConfig small(std::vector<int> widths, std::uint64_t seed = 1) {
  MlpConfig c;
  c.hidden_widths = std::move(widths);
  c.seed = seed;
  return c;
}

void randomize(MlpModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 0.7);
  for (auto& w : m.weights) for (auto& v : w.reshaped()) v = n(rng);
  for (auto& b : m.biases) for (auto& v : b) v = n(rng);
}

// Visits every scalar parameter of a model in a fixed order.
template <class F>
void each_param(MlpModel& m, F&& f) {
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    for (auto& v : m.weights[l].reshaped()) f(v);
    for (auto& v : m.biases[l]) f(v);
  }
}

}  // namespace

TEST(Init, DeterministicShapesAndZeroBiases) {
  const auto a = init_mlp(small({5, 4}, 3), 2);
  EXPECT_EQ(a, init_mlp(small({5, 4}, 3), 2));
  EXPECT_FALSE(a == init_mlp(small({5, 4}, 4), 2));
  EXPECT_EQ(a.layer_sizes(), (std::vector<int>{2, 5, 4, 1}));
  for (const auto& b : a.biases) EXPECT_TRUE(b.isZero(0.0));
}

TEST(Init, HeVariance) {
  const auto m = init_mlp(MlpConfig{}, 1);
  ASSERT_EQ(m.layer_sizes(), (std::vector<int>{1, 512, 448, 1}));
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    const auto& w = m.weights[l];
    if (w.size() < 100) continue;
    const double var = w.squaredNorm() / static_cast<double>(w.size());
    const double expect = 2.0 / static_cast<double>(w.cols());
    EXPECT_NEAR(var / expect, 1.0, 0.2) << "layer " << l;
  }
}

TEST(Forward, MatchesLoopOracle) {
  auto m = init_mlp(small({6, 5}), 3);
  randomize(m, 8);
  std::vector<std::vector<std::vector<double>>> w;
  std::vector<std::vector<double>> b;
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    w.emplace_back();
    for (Eigen::Index o = 0; o < m.weights[l].rows(); ++o) {
      w.back().emplace_back();
      for (Eigen::Index i = 0; i < m.weights[l].cols(); ++i) w.back().back().push_back(m.weights[l](o, i));
    }
    b.emplace_back(m.biases[l].data(), m.biases[l].data() + m.biases[l].size());
  }
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd xs(10, 3);
  for (auto& v : xs.reshaped()) v = n(rng);
  const auto out = forward(m, xs);
  for (Eigen::Index r = 0; r < xs.rows(); ++r) {
    const std::vector<double> row{xs(r, 0), xs(r, 1), xs(r, 2)};
    EXPECT_NEAR(out(r), oracle::mlp_forward(w, b, row), 1e-12);
  }
}

TEST(Forward, ReluPassthroughAndZeroWeights) {
  auto m = init_mlp(small({1}), 1);
  m.weights[0](0, 0) = 1.0;
  m.weights[1](0, 0) = 1.0;
  Eigen::MatrixXd xs(3, 1);
  xs << -2.0, 0.0, 3.5;
  EXPECT_EQ(forward(m, xs), Eigen::Vector3d(0, 0, 3.5));

  auto z = init_mlp(small({4, 4}), 2).zeros_like();
  z.biases.back()(0) = 1.25;
  EXPECT_EQ(forward(z, Eigen::MatrixXd::Random(5, 2)), Eigen::VectorXd::Constant(5, 1.25));
  EXPECT_THROW(forward(z, Eigen::MatrixXd::Zero(2, 3)), InvalidArgument);
}

TEST(Backward, FiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  for (const auto& widths : {std::vector<int>{}, std::vector<int>{3}, std::vector<int>{4, 3}}) {
    auto m = init_mlp(small(widths), 2);
    randomize(m, 100 + widths.size());
    Eigen::MatrixXd xs(7, 2);
    Eigen::VectorXd ys(7);
    for (auto& v : xs.reshaped()) v = n(rng);
    for (auto& v : ys) v = n(rng);
    auto grads = backward(m, xs, ys);
    std::vector<double> analytic;
    each_param(grads, [&](double& g) { analytic.push_back(g); });
    std::size_t k = 0;
    each_param(m, [&](double& p) {
      const double keep = p, h = 1e-6;
      p = keep + h;
      const double up = mse_loss(m, xs, ys);
      p = keep - h;
      const double down = mse_loss(m, xs, ys);
      p = keep;
      const double numeric = (up - down) / (2 * h);
      const double g = analytic[k++];
      EXPECT_LE(std::abs(numeric - g), 1e-5 * std::max(1.0, std::abs(g))) << "param " << k;
    });
  }
}

TEST(Backward, LinearNetClosedForm) {
  auto m = init_mlp(small({}), 2);
  m.weights[0] << 0.5, -1.0;
  m.biases[0] << 0.25;
  Eigen::MatrixXd xs(3, 2);
  xs << 1, 2, 0, 1, -1, 3;
  const Eigen::Vector3d ys(1, 0, 2);
  double loss = 0;
  const auto g = backward(m, xs, ys, &loss);
  const Eigen::VectorXd r = (xs * m.weights[0].transpose()).col(0).array() + 0.25 - ys.array();
  EXPECT_NEAR(loss, r.squaredNorm() / 3, 1e-15);
  const Eigen::RowVectorXd gw = (2.0 / 3.0) * r.transpose() * xs;
  EXPECT_NEAR((g.weights[0] - gw).norm(), 0.0, 1e-14);
  EXPECT_NEAR(g.biases[0](0), (2.0 / 3.0) * r.sum(), 1e-14);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  auto m = init_mlp(small({}), 1);
  m.weights[0] << 1.0;
  m.biases[0] << 1.0;
  auto g = m.zeros_like();
  g.weights[0] << 3.0;
  g.biases[0] << -0.02;
  auto s = AdamState::for_model(m);
  adam_step(s, m, g, 0.1);
  EXPECT_NEAR(m.weights[0](0, 0), 0.9, 1e-8);
  EXPECT_NEAR(m.biases[0](0), 1.1, 1e-6);
  EXPECT_EQ(s.t, 1);
}

TEST(Adam, ZeroGradientDoesNotMove) {
  auto m = init_mlp(small({3}), 2);
  const auto before = m;
  auto s = AdamState::for_model(m);
  for (int i = 0; i < 5; ++i) adam_step(s, m, m.zeros_like(), 0.1);
  EXPECT_EQ(m, before);
}

TEST(Adam, SolvesLeastSquares) {
  auto m = init_mlp(small({}), 1);
  Eigen::MatrixXd xs = generate_grid(20, -1.0, 1.0);
  const Eigen::VectorXd ys = (2.0 * xs.col(0)).array() + 1.0;
  auto s = AdamState::for_model(m);
  const double start = mse_loss(m, xs, ys);
  for (int i = 0; i < 2000; ++i) adam_step(s, m, backward(m, xs, ys), 0.05);
  EXPECT_LT(mse_loss(m, xs, ys), 1e-6 * start);
  EXPECT_NEAR(m.weights[0](0, 0), 2.0, 1e-3);
  EXPECT_NEAR(m.biases[0](0), 1.0, 1e-3);
}

TEST(TrainMlp, DeterministicCheckpointAndDescent) {
  const auto d = make_split_dataset(SplitSpec{.n_points = 201}, exp_growth());
  MlpConfig cfg = small({16, 16}, 11);
  cfg.max_epochs = 60;
  cfg.patience = 10;
  const auto a = train_mlp(d.train, cfg);
  const auto b = train_mlp(d.train, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.trace.val_loss, b.trace.val_loss);

  const auto& t = a.trace;
  ASSERT_FALSE(t.val_loss.empty());
  EXPECT_EQ(t.best_val_loss, *std::min_element(t.val_loss.begin(), t.val_loss.end()));
  EXPECT_EQ(t.val_loss[static_cast<std::size_t>(t.best_epoch)], t.best_val_loss);
  if (t.stopped_early) {
    EXPECT_EQ(t.val_loss.size(), static_cast<std::size_t>(t.best_epoch + cfg.patience + 1));
  } else {
    EXPECT_EQ(t.val_loss.size(), static_cast<std::size_t>(cfg.max_epochs));
  }
  EXPECT_LT(t.train_loss.back(), t.train_loss.front());
  EXPECT_TRUE(a.model.all_finite());

  // The returned model is the best checkpoint, not the last one.
  EXPECT_LE(mse_loss(a.model, d.train.xs, d.train.ys),
            mse_loss(init_mlp(cfg, 1), d.train.xs, d.train.ys));
}

TEST(TrainMlp, RejectsTinyInputs) {
  SampleSet one;
  one.xs = Eigen::MatrixXd::Zero(1, 1);
  one.ys = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(train_mlp(one, small({2})), InvalidArgument);
  MlpConfig bad = small({2});
  bad.val_fraction = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}
