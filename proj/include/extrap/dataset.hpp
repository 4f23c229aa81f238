#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "extrap/errors.hpp"
#include "extrap/random.hpp"

namespace extrap {

/// A named scalar function used to label the synthetic samples.
struct TargetFunction {
  std::string name;
  std::function<double(double)> eval;
};

/// exp(x^2 + x); strictly increasing on [0, 1], from 1 to e^2.
inline TargetFunction exp_growth() {
  return {"expgrowth", [](double x) { return std::exp(x * x + x); }};
}

inline TargetFunction lookup_function(std::string_view name) {
  if (name == "expgrowth") return exp_growth();
  throw InvalidArgument("unknown target function: " + std::string(name));
}

/// Row-aligned feature matrix (n x d) and targets (n).
struct SampleSet {
  Eigen::MatrixXd xs;
  Eigen::VectorXd ys;

  Eigen::Index size() const { return ys.size(); }
  Eigen::Index dim() const { return xs.cols(); }

  void validate() const {
    detail::require(xs.rows() == ys.size(), "SampleSet: xs rows != ys length");
    detail::require(ys.size() >= 1, "SampleSet: empty");
    detail::require(xs.allFinite() && ys.allFinite(), "SampleSet: non-finite entry");
  }

  /// Rows selected by `idx`, in the given order (duplicates allowed).
  SampleSet subset(const std::vector<Eigen::Index>& idx) const {
    SampleSet out{Eigen::MatrixXd(static_cast<Eigen::Index>(idx.size()), xs.cols()),
                  Eigen::VectorXd(static_cast<Eigen::Index>(idx.size()))};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      out.xs.row(r) = xs.row(idx[i]);
      out.ys(r) = ys(idx[i]);
    }
    return out;
  }
};

enum class SamplingMode { Grid, UniformRandom };

struct SplitSpec {
  double lo = 0.0;
  double hi = 1.0;
  double boundary = 0.7;
  int n_points = 1001;
  SamplingMode mode = SamplingMode::Grid;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(lo < boundary && boundary < hi, "SplitSpec: need lo < boundary < hi");
    detail::require(n_points >= 2, "SplitSpec: n_points must be >= 2");
  }
};

struct SplitDataset {
  SampleSet train;
  SampleSet test;
};

/// n inclusive, equispaced points. Computed as lo + (hi - lo) * (i / (n - 1))
/// so that grid fractions with an exact decimal (700/1000) land exactly.
inline Eigen::VectorXd generate_grid(int n, double lo, double hi) {
  detail::require(n >= 2, "generate_grid: n must be >= 2");
  detail::require(lo < hi, "generate_grid: need lo < hi");
  Eigen::VectorXd out(n);
  const double last = static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) out(i) = lo + (hi - lo) * (static_cast<double>(i) / last);
  out(n - 1) = hi;
  return out;
}

inline Eigen::VectorXd evaluate(const TargetFunction& f, const Eigen::VectorXd& xs) {
  Eigen::VectorXd ys(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    const double y = f.eval(xs(i));
    if (!std::isfinite(y)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << f.name << ": non-finite value at x = " << xs(i);
      throw NumericOverflow(msg.str());
    }
    ys(i) = y;
  }
  return ys;
}

/// Rows with x < boundary go to train, x >= boundary to test. Uses column 0.
inline SplitDataset split(const SampleSet& full, double boundary) {
  full.validate();
  std::vector<Eigen::Index> lower, upper;
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    (full.xs(i, 0) < boundary ? lower : upper).push_back(i);
  }
  if (lower.empty() || upper.empty()) {
    std::ostringstream msg;
    msg << "split at " << boundary << " leaves the " << (lower.empty() ? "train" : "test")
        << " partition empty";
    throw DegenerateSplit(msg.str());
  }
  return {full.subset(lower), full.subset(upper)};
}

/// Samples f on the configured domain. Grid mode is fully deterministic;
/// uniform-random mode draws sorted points from the seeded generator.
inline SampleSet make_samples(const SplitSpec& spec, const TargetFunction& f) {
  spec.validate();
  Eigen::VectorXd xs;
  if (spec.mode == SamplingMode::Grid) {
    xs = generate_grid(spec.n_points, spec.lo, spec.hi);
  } else {
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> u(spec.lo, spec.hi);
    std::vector<double> draws(static_cast<std::size_t>(spec.n_points));
    for (auto& v : draws) v = u(rng);
    std::sort(draws.begin(), draws.end());
    xs = Eigen::Map<const Eigen::VectorXd>(draws.data(), spec.n_points);
  }
  SampleSet out{Eigen::MatrixXd(xs), evaluate(f, xs)};
  return out;
}

inline SplitDataset make_split_dataset(const SplitSpec& spec, const TargetFunction& f) {
  return split(make_samples(spec, f), spec.boundary);
}

}  // namespace extrap
