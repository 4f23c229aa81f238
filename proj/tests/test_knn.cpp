#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "extrap/dataset.hpp"
#include "extrap/knn.hpp"
#include "extrap/metrics.hpp"

using namespace extrap;

namespace {

Eigen::MatrixXd col(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

constexpr KnnSearch kModes[] = {KnnSearch::Linear, KnnSearch::Sorted1d, KnnSearch::BallTree};

}  // namespace

TEST(Knn, InverseDistanceHandValue) {
  for (auto mode : kModes) {
    const auto m = fit_knn(col({0, 1, 3}), Eigen::Vector3d(0, 10, 50), {2, KnnWeighting::InverseDistance, mode});
    // Neighbors of 0.75: x=1 (d .25) and x=0 (d .75); weights 4 and 4/3.
    EXPECT_NEAR(predict_knn(m, col({0.75}))(0), (10 * 4.0) / (4.0 + 4.0 / 3.0), 1e-12);
    // Beyond the data: x=3 (d 1) and x=1 (d 3).
    EXPECT_NEAR(predict_knn(m, col({4}))(0), (50 + 10 / 3.0) / (1 + 1 / 3.0), 1e-12);
  }
}

TEST(Knn, UniformAverages) {
  const auto m = fit_knn(col({0, 1, 3}), Eigen::Vector3d(0, 10, 50), {2, KnnWeighting::Uniform, KnnSearch::Linear});
  EXPECT_EQ(predict_knn(m, col({0.2}))(0), 5.0);
}

TEST(Knn, ExactMatchReturnsTheTarget) {
  for (auto mode : kModes) {
    const auto m = fit_knn(col({0, 1, 2}), Eigen::Vector3d(5, 7, 9), {2, KnnWeighting::InverseDistance, mode});
    EXPECT_EQ(predict_knn(m, col({1}))(0), 7.0);
    const auto dup = fit_knn(col({1, 1, 2}), Eigen::Vector3d(4, 6, 9), {3, KnnWeighting::InverseDistance, mode});
    EXPECT_EQ(predict_knn(dup, col({1}))(0), 5.0);
  }
}

TEST(Knn, EqualDistanceTiesPreferLowerIndex) {
  for (auto mode : kModes) {
    const auto m = fit_knn(col({2, 0, 1}), Eigen::Vector3d(20, 0, 10), {1, KnnWeighting::Uniform, mode});
    // 0.5 is equidistant from rows 1 and 2; row 1 wins.
    EXPECT_EQ(predict_knn(m, col({0.5}))(0), 0.0);
    const auto nb = m.neighbors(col({1.5}).row(0));
    ASSERT_EQ(nb.size(), 1u);
    EXPECT_EQ(nb[0].index, 0);
  }
}

TEST(Knn, RejectsBadK) {
  EXPECT_THROW(fit_knn(col({0, 1}), Eigen::Vector2d(0, 1), {3}), InvalidArgument);
  EXPECT_THROW(fit_knn(col({0, 1}), Eigen::Vector2d(0, 1), {0}), InvalidArgument);
  Eigen::MatrixXd two(2, 2);
  two.setZero();
  EXPECT_THROW(fit_knn(two, Eigen::Vector2d(0, 1), {1, KnnWeighting::Uniform, KnnSearch::Sorted1d}),
               InvalidArgument);
}

TEST(Knn, SearchModesAgree) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> coarse(0, 20);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index rows = 20 + trial * 3;
    const int dim = trial % 2 ? 1 : 3;
    Eigen::MatrixXd x(rows, dim);
    // Coarse grid values produce plenty of exact distance ties.
    for (auto& v : x.reshaped()) v = trial % 4 < 2 ? coarse(rng) / 4.0 : n(rng);
    Eigen::VectorXd y(rows);
    for (auto& v : y) v = n(rng);
    Eigen::MatrixXd q(30, dim);
    for (auto& v : q.reshaped()) v = trial % 4 < 2 ? coarse(rng) / 4.0 - 0.125 * (coarse(rng) % 2) : 2 * n(rng);
    const int k = 1 + trial % 5;
    const auto ref = fit_knn(x, y, {k, KnnWeighting::InverseDistance, KnnSearch::Linear});
    std::vector<KnnSearch> others{KnnSearch::BallTree};
    if (dim == 1) others.push_back(KnnSearch::Sorted1d);
    for (auto mode : others) {
      const auto m = fit_knn(x, y, {k, KnnWeighting::InverseDistance, mode});
      for (Eigen::Index i = 0; i < q.rows(); ++i) {
        const auto a = ref.neighbors(q.row(i));
        const auto b = m.neighbors(q.row(i));
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
          EXPECT_EQ(a[j].index, b[j].index) << "trial " << trial;
          EXPECT_EQ(a[j].distance, b[j].distance);
        }
      }
      EXPECT_EQ(predict_knn(ref, q), predict_knn(m, q));
    }
  }
}

TEST(Knn, PredictionsAreConvexCombinations) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd x(80, 2);
  Eigen::VectorXd y(80);
  for (auto& v : x.reshaped()) v = n(rng);
  for (auto& v : y) v = n(rng);
  Eigen::MatrixXd q(100, 2);
  for (auto& v : q.reshaped()) v = 4 * n(rng);
  for (int k : {1, 2, 7}) {
    const auto m = fit_knn(x, y, {k});
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      const auto nb = m.neighbors(q.row(i));
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& b : nb) {
        lo = std::min(lo, y(b.index));
        hi = std::max(hi, y(b.index));
      }
      const double p = m.predict_row(q.row(i));
      EXPECT_GE(p, lo - 1e-12);
      EXPECT_LE(p, hi + 1e-12);
    }
  }
}

TEST(Knn, StudyPlateauUsesTheTwoLastTrainingPoints) {
  const auto d = make_split_dataset(SplitSpec{}, exp_growth());
  const auto m = fit_knn(d.train.xs, d.train.ys);
  const auto p = predict_knn(m, d.test.xs);
  const double f698 = std::exp(0.698 * 0.698 + 0.698), f699 = std::exp(0.699 * 0.699 + 0.699);
  const double at1 = (f699 / 0.301 + f698 / 0.302) / (1 / 0.301 + 1 / 0.302);
  EXPECT_NEAR(p(p.size() - 1), at1, 1e-9);
  for (Eigen::Index i = 1; i < p.size(); ++i) EXPECT_LE(p(i), p(i - 1) + 1e-12);
  EXPECT_EQ(mae(d.train.ys, predict_knn(m, d.train.xs)), 0.0);
}
