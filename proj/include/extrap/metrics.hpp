#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "extrap/errors.hpp"

namespace extrap {

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

namespace detail {

inline void check_pair(const VectorRef& y_true, const VectorRef& y_pred) {
  require(y_true.size() == y_pred.size(), "metrics: length mismatch");
  require(y_true.size() > 0, "metrics: empty input");
}

}  // namespace detail

/// L1: mean absolute error.
inline double mae(const VectorRef& y_true, const VectorRef& y_pred) {
  detail::check_pair(y_true, y_pred);
  return (y_true - y_pred).cwiseAbs().mean();
}

/// L2: root mean squared error.
inline double rmse(const VectorRef& y_true, const VectorRef& y_pred) {
  detail::check_pair(y_true, y_pred);
  return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

/// L-infinity: max absolute error.
inline double max_abs_err(const VectorRef& y_true, const VectorRef& y_pred) {
  detail::check_pair(y_true, y_pred);
  return (y_true - y_pred).cwiseAbs().maxCoeff();
}

/// One row of the train/test comparison table.
struct MetricsRow {
  std::string model_name;
  double l1_train = 0, l1_test = 0;
  double l2_train = 0, l2_test = 0;
  double linf_train = 0, linf_test = 0;
  double d_l1 = 0, d_l2 = 0, d_linf = 0;

  bool operator==(const MetricsRow&) const = default;
};

inline MetricsRow gap_row(std::string model_name, const VectorRef& train_true,
                          const VectorRef& train_pred, const VectorRef& test_true,
                          const VectorRef& test_pred) {
  MetricsRow row;
  row.model_name = std::move(model_name);
  row.l1_train = mae(train_true, train_pred);
  row.l1_test = mae(test_true, test_pred);
  row.l2_train = rmse(train_true, train_pred);
  row.l2_test = rmse(test_true, test_pred);
  row.linf_train = max_abs_err(train_true, train_pred);
  row.linf_test = max_abs_err(test_true, test_pred);
  row.d_l1 = std::abs(row.l1_test - row.l1_train);
  row.d_l2 = std::abs(row.l2_test - row.l2_train);
  row.d_linf = std::abs(row.linf_test - row.linf_train);
  return row;
}

}  // namespace extrap
