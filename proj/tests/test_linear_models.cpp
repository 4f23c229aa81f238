#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "extrap/dataset.hpp"
#include "extrap/linear_models.hpp"
#include "extrap/metrics.hpp"
#include "oracles.hpp"

using namespace extrap;

namespace {

Eigen::MatrixXd col(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

std::vector<double> std_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

SplitDataset study() { return make_split_dataset(SplitSpec{}, exp_growth()); }

}  // namespace

TEST(Ols, TwoPointsDefineTheLine) {
  const auto fit = fit_ols(col({0, 1}), Eigen::Vector2d(1, 3));
  EXPECT_NEAR(fit.weights(0), 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
}

TEST(Ols, ConstantTargets) {
  const auto fit = fit_ols(col({0, 1, 2, 5}), Eigen::VectorXd::Constant(4, 3.5));
  EXPECT_NEAR(fit.weights(0), 0.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 3.5, 1e-14);
}

TEST(Ols, RankDeficient) {
  EXPECT_THROW(fit_ols(col({1, 1, 1}), Eigen::Vector3d(1, 2, 3)), SingularSystem);
  Eigen::MatrixXd twin(4, 2);
  twin << 0, 0, 1, 2, 2, 4, 3, 6;
  EXPECT_THROW(fit_ols(twin, Eigen::Vector4d(0, 1, 2, 3)), SingularSystem);
  EXPECT_THROW(fit_ols(col({1}), Eigen::VectorXd::Ones(1)), SingularSystem);
}

TEST(Ols, StudyMatchesNormalEquationsOracle) {
  const auto d = study();
  const auto fit = fit_ols(d.train.xs, d.train.ys);
  const auto [slope, intercept] = oracle::line_fit(std_vec(d.train.xs.col(0)), std_vec(d.train.ys));
  EXPECT_NEAR(fit.weights(0), slope, 1e-10);
  EXPECT_NEAR(fit.intercept, intercept, 1e-10);
  // Frozen from the closed-form oracle.
  EXPECT_NEAR(slope, 3.0385207690234743, 1e-12);
  EXPECT_NEAR(intercept, 0.7121367441155582, 1e-12);
  const double linf = max_abs_err(d.test.ys, predict_linear(fit, d.test.xs));
  EXPECT_NEAR(linf, 3.6383985857916, 1e-9);
}

TEST(Ols, ResidualOrthogonality) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 10 + trial * 5, d = 1 + trial % 3;
    Eigen::MatrixXd x(rows, d);
    Eigen::VectorXd y(rows);
    for (auto& v : x.reshaped()) v = n(rng);
    for (auto& v : y) v = 5 * n(rng);
    const auto fit = fit_ols(x, y);
    const Eigen::VectorXd r = y - predict_linear(fit, x);
    const double scale = 1e-8 * rows * (1 + y.cwiseAbs().maxCoeff());
    EXPECT_NEAR(r.sum(), 0.0, scale);
    for (int j = 0; j < d; ++j) EXPECT_NEAR(r.dot(x.col(j)), 0.0, scale);
  }
}

TEST(Ridge, ZeroPenaltyIsOls) {
  const auto d = study();
  const auto ols = fit_ols(d.train.xs, d.train.ys);
  const auto ridge = fit_ridge(d.train.xs, d.train.ys, {0.0});
  EXPECT_NEAR(ridge.weights(0), ols.weights(0), 1e-10);
  EXPECT_NEAR(ridge.intercept, ols.intercept, 1e-10);
}

TEST(Ridge, InfiniteShrinkageLeavesTheMean) {
  const auto fit = fit_ridge(col({0, 1}), Eigen::Vector2d(0, 1), {1e12});
  EXPECT_NEAR(fit.weights(0), 0.0, 1e-9);
  EXPECT_NEAR(fit.intercept, 0.5, 1e-9);
}

TEST(Ridge, StudyMatchesPenalizedOracle) {
  const auto d = study();
  const auto fit = fit_ridge(d.train.xs, d.train.ys, {0.1});
  const auto [slope, intercept] =
      oracle::line_fit(std_vec(d.train.xs.col(0)), std_vec(d.train.ys), 0.1);
  EXPECT_NEAR(fit.weights(0), slope, 1e-6);
  EXPECT_NEAR(fit.intercept, intercept, 1e-6);
  EXPECT_NEAR(slope, 3.027927415339059, 1e-12);
}

TEST(Ridge, MonotoneShrinkage) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd x(40, 3);
  Eigen::VectorXd y(40);
  for (auto& v : x.reshaped()) v = n(rng);
  for (auto& v : y) v = n(rng) + 2;
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4}) {
    const double norm = fit_ridge(x, y, {a}).weights.norm();
    EXPECT_LE(norm, prev + 1e-12);
    prev = norm;
  }
}

TEST(BayesRidge, WeightStepEqualsRidge) {
  const auto d = study();
  for (auto [noise, weight] : {std::pair{2.0, 0.5}, std::pair{50.0, 3.0}, std::pair{1e3, 1e-2}}) {
    const auto step = bayes_ridge_weights(d.train.xs, d.train.ys, noise, weight);
    const auto ridge = fit_ridge(d.train.xs, d.train.ys, {weight / noise});
    EXPECT_NEAR(step.weights(0), ridge.weights(0), 1e-10);
    EXPECT_NEAR(step.intercept, ridge.intercept, 1e-10);
  }
}

TEST(BayesRidge, NoiselessLine) {
  Eigen::MatrixXd x = generate_grid(100, 0.0, 1.0);
  const Eigen::VectorXd y = 2.0 * x.col(0);
  const auto fit = fit_bayesian_ridge(x, y);
  EXPECT_NEAR(fit.weights(0), 2.0, 1e-3);
  EXPECT_GT(fit.noise_precision, 0);
  EXPECT_GT(fit.weight_precision, 0);
  EXPECT_LE(fit.n_iter_run, 100);
}

TEST(BayesRidge, ConstantTargets) {
  const auto fit = fit_bayesian_ridge(col({0, 1, 2, 3}), Eigen::VectorXd::Constant(4, -1.25));
  EXPECT_NEAR(fit.weights(0), 0.0, 1e-12);
  EXPECT_NEAR(fit.intercept, -1.25, 1e-12);
}

TEST(BayesRidge, IterationCapIsNotAnError) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd x(30, 2);
  Eigen::VectorXd y(30);
  for (auto& v : x.reshaped()) v = n(rng);
  for (auto& v : y) v = n(rng);
  BayesRidgeConfig cfg;
  cfg.max_iter = 1;
  cfg.tol = 0.0;
  const auto fit = fit_bayesian_ridge(x, y, cfg);
  EXPECT_EQ(fit.n_iter_run, 1);
  EXPECT_TRUE(fit.weights.allFinite());
  EXPECT_THROW(fit_bayesian_ridge(x, y, BayesRidgeConfig{1, 0.0, 1, 1, 1, 1}), InvalidArgument);
}

TEST(BayesRidge, StudyIsCloseToOls) {
  const auto d = study();
  const auto fit = fit_bayesian_ridge(d.train.xs, d.train.ys);
  const auto ols = fit_ols(d.train.xs, d.train.ys);
  EXPECT_NEAR(fit.weights(0), ols.weights(0), 1e-2);
}

TEST(Huber, PerfectLine) {
  Eigen::MatrixXd x = generate_grid(20, -1.0, 1.0);
  const Eigen::VectorXd y = (3.0 * x.col(0)).array() - 0.5;
  HuberConfig cfg;
  cfg.alpha = 0.0;
  const auto fit = fit_huber(x, y, cfg);
  EXPECT_NEAR(fit.weights(0), 3.0, 1e-12);
  EXPECT_NEAR(fit.intercept, -0.5, 1e-12);
  EXPECT_NEAR(huber_objective(fit, x, y, cfg), 0.0, 1e-20);
  EXPECT_TRUE(fit.converged);
}

TEST(Huber, HugeEpsilonIsOls) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd x(50, 1);
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) {
    x(i, 0) = n(rng);
    y(i) = 1.5 * x(i, 0) + 4 * n(rng);
  }
  HuberConfig cfg;
  cfg.epsilon = 1e6;
  cfg.alpha = 0.0;
  const auto h = fit_huber(x, y, cfg);
  const auto o = fit_ols(x, y);
  EXPECT_NEAR(h.weights(0), o.weights(0), 1e-6);
  EXPECT_NEAR(h.intercept, o.intercept, 1e-6);
}

TEST(Huber, ResistsAGrossOutlier) {
  Eigen::MatrixXd x = generate_grid(21, 0.0, 10.0);
  Eigen::VectorXd y = x.col(0);
  y(20) = 200.0;
  HuberConfig cfg;
  cfg.alpha = 0.0;
  const auto h = fit_huber(x, y, cfg);
  const auto o = fit_ols(x, y);
  EXPECT_LT(std::abs(h.weights(0) - 1.0), std::abs(o.weights(0) - 1.0));
  EXPECT_TRUE(h.converged);
}

TEST(Huber, InsideEpsilonEqualsRidge) {
  const auto d = study();
  const auto h = fit_huber(d.train.xs, d.train.ys, HuberConfig{});
  const Eigen::VectorXd r = d.train.ys - predict_linear(h, d.train.xs);
  ASSERT_LT(r.cwiseAbs().maxCoeff(), 1.35);
  const auto ridge = fit_ridge(d.train.xs, d.train.ys, {0.1});
  EXPECT_NEAR(h.weights(0), ridge.weights(0), 1e-6);
  EXPECT_NEAR(h.intercept, ridge.intercept, 1e-6);
}

TEST(Huber, ObjectiveIsNotWorseThanOls) {
  Eigen::MatrixXd x = generate_grid(30, 0.0, 3.0);
  Eigen::VectorXd y = x.col(0);
  y(3) += 15;
  y(17) -= 9;
  HuberConfig cfg;
  const auto h = fit_huber(x, y, cfg);
  const auto o = fit_ols(x, y);
  EXPECT_LE(huber_objective(h, x, y, cfg), huber_objective(o, x, y, cfg) + 1e-9);
  EXPECT_THROW(fit_huber(x, y, HuberConfig{1.0, 0.1, 10, 1e-8}), InvalidArgument);
}

TEST(LinearPredict, Affine) {
  LinearFit f{Eigen::VectorXd::Constant(1, 2.0), 1.0};
  EXPECT_EQ(predict_linear(f, col({0}))(0), 1.0);
  EXPECT_EQ(predict_linear(f, col({3}))(0), 7.0);

  const auto d = study();
  for (const auto& fit : {fit_ols(d.train.xs, d.train.ys), fit_ridge(d.train.xs, d.train.ys),
                          fit_huber(d.train.xs, d.train.ys),
                          fit_bayesian_ridge(d.train.xs, d.train.ys).as_linear()}) {
    const Eigen::MatrixXd g = generate_grid(61, 0.4, 1.0);
    const auto p = predict_linear(fit, g);
    for (Eigen::Index i = 1; i + 1 < p.size(); ++i) {
      EXPECT_NEAR(p(i + 1) - 2 * p(i) + p(i - 1), 0.0, 1e-12);
    }
  }
}
