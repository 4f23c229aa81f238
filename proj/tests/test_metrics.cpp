#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "extrap/metrics.hpp"

using namespace extrap;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(Norms, HandValues) {
  const auto zero = vec({0, 0});
  EXPECT_EQ(mae(zero, vec({1, -1})), 1.0);
  EXPECT_EQ(mae(zero, vec({0, 2})), 1.0);
  EXPECT_DOUBLE_EQ(rmse(zero, vec({0, 2})), std::sqrt(2.0));
  EXPECT_EQ(rmse(zero, vec({1, -1})), 1.0);
  EXPECT_EQ(max_abs_err(zero, vec({0, 2})), 2.0);
  EXPECT_EQ(max_abs_err(zero, vec({-3, 1})), 3.0);
  const auto y = vec({1.5, -2, 7});
  EXPECT_EQ(mae(y, y), 0.0);
  EXPECT_EQ(rmse(y, y), 0.0);
  EXPECT_EQ(max_abs_err(y, y), 0.0);
}

TEST(Norms, RejectEmptyAndMismatched) {
  EXPECT_THROW(mae(Eigen::VectorXd(), Eigen::VectorXd()), InvalidArgument);
  EXPECT_THROW(rmse(vec({1, 2}), vec({1})), InvalidArgument);
  EXPECT_THROW(max_abs_err(vec({1}), vec({1, 2})), InvalidArgument);
}

TEST(Norms, OrderingScaleAndPermutation) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 3);
  std::uniform_int_distribution<int> len(1, 50);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = len(rng);
    Eigen::VectorXd r(m);
    for (auto& v : r) v = trial % 3 == 0 ? std::exp(n(rng)) : n(rng);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    const double l1 = mae(z, r), l2 = rmse(z, r), li = max_abs_err(z, r);
    EXPECT_LE(l1, l2 * (1 + 1e-12));
    EXPECT_LE(l2, li * (1 + 1e-12));

    const double c = std::abs(n(rng));
    const Eigen::VectorXd s = c * r;
    EXPECT_NEAR(mae(z, s), c * l1, 1e-12 * (1 + c * l1));
    EXPECT_NEAR(rmse(z, s), c * l2, 1e-12 * (1 + c * l2));
    EXPECT_NEAR(max_abs_err(z, s), c * li, 1e-12 * (1 + c * li));

    Eigen::VectorXd p = r;
    std::shuffle(p.begin(), p.end(), rng);
    EXPECT_NEAR(mae(z, p), l1, 1e-12 * (1 + l1));
    EXPECT_NEAR(rmse(z, p), l2, 1e-12 * (1 + l2));
    EXPECT_EQ(max_abs_err(z, p), li);
  }
}

TEST(GapRow, AbsoluteDeltas) {
  // Constant residuals make each norm equal the residual magnitude.
  const auto tr_true = vec({0, 0, 0}), te_true = vec({0, 0});
  const auto row = gap_row("m", tr_true, vec({4.3e-3, -4.3e-3, 4.3e-3}), te_true, vec({5.3e-2, 5.3e-2}));
  EXPECT_NEAR(row.d_l1, 4.9e-2, 1e-3);
  EXPECT_NEAR(row.l1_train, 4.3e-3, 1e-15);
  EXPECT_NEAR(row.l1_test, 5.3e-2, 1e-15);
  EXPECT_GE(row.d_l1, 0.0);

  // Train worse than test still yields a nonnegative gap.
  const auto rev = gap_row("r", te_true, vec({1, 1}), tr_true, vec({0.5, 0.5, 0.5}));
  EXPECT_EQ(rev.d_l1, 0.5);
  EXPECT_EQ(rev.d_linf, 0.5);
}

TEST(GapRow, IdenticalSplitsHaveZeroGap) {
  const auto t = vec({1, 2, 3}), p = vec({1.5, 2, 2});
  const auto row = gap_row("same", t, p, t, p);
  EXPECT_EQ(row.d_l1, 0.0);
  EXPECT_EQ(row.d_l2, 0.0);
  EXPECT_EQ(row.d_linf, 0.0);
  EXPECT_EQ(row.model_name, "same");
}

TEST(GapRow, LinfPlateauExample) {
  Eigen::VectorXd tr_true = Eigen::VectorXd::Zero(1), te_true = Eigen::VectorXd::Zero(1);
  const auto row = gap_row("xgb", tr_true, vec({1.8e-2}), te_true, vec({4.1}));
  EXPECT_NEAR(row.d_linf, 4.1, 0.05);
}

TEST(GapRow, PropagatesErrors) {
  EXPECT_THROW(gap_row("bad", vec({1}), vec({1, 2}), vec({1}), vec({1})), InvalidArgument);
}
