#pragma once

#include <cmath>
#include <limits>
#include <algorithm>

#include <Eigen/Dense>

#include "extrap/errors.hpp"

namespace extrap {

/// Affine predictor y = weights . x + intercept.
struct LinearFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  /// Only meaningful for iterative fits (Huber).
  bool converged = true;
  int n_iter = 0;
};

struct RidgeConfig {
  double alpha = 0.1;
};

struct BayesRidgeConfig {
  int max_iter = 100;
  double alpha_1 = 1e-7;
  double alpha_2 = 1e-5;
  double lambda_1 = 1e-5;
  double lambda_2 = 1e-7;
  double tol = 1e-3;
};

struct BayesRidgeFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double noise_precision = 1.0;
  double weight_precision = 1.0;
  int n_iter_run = 0;

  LinearFit as_linear() const { return {weights, intercept, true, n_iter_run}; }
};

struct HuberConfig {
  double epsilon = 1.35;
  double alpha = 0.1;
  int max_iter = 200;
  double tol = 1e-10;
};

inline Eigen::VectorXd predict_linear(const LinearFit& fit, const Eigen::MatrixXd& xs) {
  detail::require(xs.cols() == fit.weights.size(), "predict_linear: feature count mismatch");
  return (xs * fit.weights).array() + fit.intercept;
}

namespace detail {

/// Minimizes sum_i w_i (y_i - b - x_i.beta)^2 + alpha |beta|^2 with the
/// intercept left unpenalized (weighted centering). Solved as an augmented
/// least-squares problem by column-pivoted QR.
inline LinearFit solve_centered_ls(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                   const Eigen::VectorXd* sample_weights, double alpha,
                                   bool reject_rank_deficient) {
  const Eigen::Index n = xs.rows();
  const Eigen::Index d = xs.cols();
  require(n == ys.size(), "linear fit: xs rows != ys length");
  require(n >= 1, "linear fit: empty input");
  require(alpha >= 0.0, "linear fit: alpha must be >= 0");

  Eigen::VectorXd w = sample_weights ? *sample_weights : Eigen::VectorXd::Ones(n);
  const double wsum = w.sum();
  require(wsum > 0.0, "linear fit: weights sum to zero");
  const Eigen::RowVectorXd x_mean = (w.asDiagonal() * xs).colwise().sum() / wsum;
  const double y_mean = w.dot(ys) / wsum;

  const Eigen::VectorXd sw = w.cwiseSqrt();
  Eigen::MatrixXd a(n + (alpha > 0.0 ? d : 0), d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(a.rows());
  a.topRows(n) = sw.asDiagonal() * (xs.rowwise() - x_mean);
  b.head(n) = sw.cwiseProduct((ys.array() - y_mean).matrix());
  if (alpha > 0.0) a.bottomRows(d) = std::sqrt(alpha) * Eigen::MatrixXd::Identity(d, d);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (reject_rank_deficient && qr.rank() < d) {
    throw SingularSystem("linear fit: design matrix is rank deficient");
  }
  LinearFit fit;
  fit.weights = qr.solve(b);
  fit.intercept = y_mean - x_mean.dot(fit.weights);
  if (!fit.weights.allFinite() || !std::isfinite(fit.intercept)) {
    throw NumericOverflow("linear fit: non-finite coefficients");
  }
  return fit;
}

}  // namespace detail

/// Ordinary least squares.
inline LinearFit fit_ols(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
  if (xs.rows() < xs.cols() + 1) {
    throw SingularSystem("fit_ols: need at least d + 1 samples");
  }
  return detail::solve_centered_ls(xs, ys, nullptr, 0.0, true);
}

/// Least squares with penalty alpha * |w|^2 added to the residual sum of squares.
inline LinearFit fit_ridge(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                           const RidgeConfig& cfg = {}) {
  return detail::solve_centered_ls(xs, ys, nullptr, cfg.alpha, false);
}

/// Posterior-mean weights of the Gaussian linear model for fixed noise and
/// weight precisions, computed through the SVD of the centered design. This is
/// the weight step of every evidence-maximization iteration.
inline LinearFit bayes_ridge_weights(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                     double noise_precision, double weight_precision) {
  detail::require(noise_precision > 0 && weight_precision > 0,
                  "bayes_ridge_weights: precisions must be positive");
  const Eigen::RowVectorXd x_mean = xs.colwise().mean();
  const double y_mean = ys.mean();
  const Eigen::MatrixXd xc = xs.rowwise() - x_mean;
  const Eigen::VectorXd yc = ys.array() - y_mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const double ratio = weight_precision / noise_precision;
  const Eigen::VectorXd shrink = s.array() / (s.array().square() + ratio);
  LinearFit fit;
  fit.weights = svd.matrixV() * shrink.asDiagonal() * (svd.matrixU().transpose() * yc);
  fit.intercept = y_mean - x_mean.dot(fit.weights);
  return fit;
}

/// Bayesian ridge regression with Gamma hyperpriors on both precisions.
/// Each iteration: weights for the current precisions, then the noise
/// precision, then the weight precision, both re-estimated from the effective
/// number of well-determined parameters gamma.
inline BayesRidgeFit fit_bayesian_ridge(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                        const BayesRidgeConfig& cfg = {}) {
  const Eigen::Index n = xs.rows();
  detail::require(n == ys.size(), "fit_bayesian_ridge: xs rows != ys length");
  detail::require(n >= 2, "fit_bayesian_ridge: need at least 2 samples");
  detail::require(cfg.max_iter >= 1, "fit_bayesian_ridge: max_iter must be >= 1");
  detail::require(cfg.alpha_1 > 0 && cfg.alpha_2 > 0 && cfg.lambda_1 > 0 && cfg.lambda_2 > 0,
                  "fit_bayesian_ridge: hyperprior parameters must be positive");

  const Eigen::MatrixXd xc = xs.rowwise() - xs.colwise().mean();
  const Eigen::VectorXd eig = Eigen::BDCSVD<Eigen::MatrixXd>(xc).singularValues().array().square();

  const double var_y = (ys.array() - ys.mean()).square().mean();
  double noise = 1.0 / (var_y + std::numeric_limits<double>::epsilon());
  double weight = 1.0;

  BayesRidgeFit out;
  Eigen::VectorXd prev;
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    const LinearFit step = bayes_ridge_weights(xs, ys, noise, weight);
    const double sse = (ys - predict_linear(step, xs)).squaredNorm();
    const double gamma =
        (noise * eig.array() / (weight + noise * eig.array())).sum();
    noise = (static_cast<double>(n) - gamma + 2.0 * cfg.alpha_1) / (sse + 2.0 * cfg.alpha_2);
    weight = (gamma + 2.0 * cfg.lambda_1) / (step.weights.squaredNorm() + 2.0 * cfg.lambda_2);
    const bool done = iter > 0 && (prev - step.weights).cwiseAbs().sum() < cfg.tol;
    prev = step.weights;
    if (done) break;
  }
  out.n_iter_run = std::min(iter + 1, cfg.max_iter);
  const LinearFit last = bayes_ridge_weights(xs, ys, noise, weight);
  out.weights = last.weights;
  out.intercept = last.intercept;
  out.noise_precision = noise;
  out.weight_precision = weight;
  return out;
}

/// Huber loss with unit scale: r^2 inside epsilon, 2 eps |r| - eps^2 outside.
inline double huber_loss(double r, double epsilon) {
  const double a = std::abs(r);
  return a <= epsilon ? r * r : 2.0 * epsilon * a - epsilon * epsilon;
}

inline double huber_objective(const LinearFit& fit, const Eigen::MatrixXd& xs,
                              const Eigen::VectorXd& ys, const HuberConfig& cfg) {
  const Eigen::VectorXd r = ys - predict_linear(fit, xs);
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += huber_loss(r(i), cfg.epsilon);
  return total + cfg.alpha * fit.weights.squaredNorm();
}

/// Robust linear fit by iteratively reweighted least squares. Residuals inside
/// epsilon get weight 1, larger ones epsilon/|r|.
inline LinearFit fit_huber(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                           const HuberConfig& cfg = {}) {
  detail::require(xs.rows() >= 2, "fit_huber: need at least 2 samples");
  detail::require(cfg.epsilon > 1.0, "fit_huber: epsilon must be > 1");
  detail::require(cfg.max_iter >= 1, "fit_huber: max_iter must be >= 1");

  LinearFit fit = detail::solve_centered_ls(xs, ys, nullptr, cfg.alpha, false);
  fit.converged = false;
  Eigen::VectorXd w(xs.rows());
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Eigen::VectorXd r = ys - predict_linear(fit, xs);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double a = std::abs(r(i));
      w(i) = a <= cfg.epsilon ? 1.0 : cfg.epsilon / a;
    }
    LinearFit next = detail::solve_centered_ls(xs, ys, &w, cfg.alpha, false);
    const double change = std::max((next.weights - fit.weights).cwiseAbs().maxCoeff(),
                                   std::abs(next.intercept - fit.intercept));
    fit = std::move(next);
    fit.n_iter = it;
    if (change < cfg.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace extrap
