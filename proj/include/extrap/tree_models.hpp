#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "extrap/errors.hpp"
#include "extrap/random.hpp"

namespace extrap {

inline constexpr int kUnlimitedDepth = std::numeric_limits<int>::max();

/// Internal nodes route x[feature] < threshold to `left`, everything else to
/// `right`. A node with feature < 0 is a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  int n_samples = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat node array; nodes[0] is the root.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  template <class Row>
  double predict_row(const Row& x) const {
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(at)];
      at = x(n.feature) < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
  }

  int depth() const { return depth_from(0); }
  std::size_t n_leaves() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }
  bool operator==(const RegressionTree&) const = default;

 private:
  int depth_from(int at) const {
    const TreeNode& n = nodes[static_cast<std::size_t>(at)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
};

struct TreeConfig {
  int max_depth = kUnlimitedDepth;
  int min_samples_split = 2;
  int min_samples_leaf = 1;

  void validate() const {
    detail::require(max_depth >= 0, "TreeConfig: max_depth must be >= 0");
    detail::require(min_samples_split >= 2, "TreeConfig: min_samples_split must be >= 2");
    detail::require(min_samples_leaf >= 1, "TreeConfig: min_samples_leaf must be >= 1");
  }
};

struct ForestConfig {
  int n_estimators = 195;
  TreeConfig tree{9, 2, 1};
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(n_estimators >= 1, "ForestConfig: n_estimators must be >= 1");
    tree.validate();
  }
};

enum class Growth { LevelWise, LeafWise };
enum class ObjectiveOrder { First, Second };

struct GbmConfig {
  int n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double subsample = 1.0;
  double colsample = 1.0;
  double min_child_weight = 0.0;
  double reg_lambda = 1.0;
  /// Leaf budget for leaf-wise growth; ignored level-wise.
  int max_leaves = 31;
  Growth growth = Growth::LevelWise;
  ObjectiveOrder objective_order = ObjectiveOrder::First;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(n_estimators >= 1, "GbmConfig: n_estimators must be >= 1");
    detail::require(learning_rate > 0 && learning_rate <= 1, "GbmConfig: learning_rate in (0,1]");
    detail::require(max_depth >= 0, "GbmConfig: max_depth must be >= 0");
    detail::require(min_samples_split >= 2, "GbmConfig: min_samples_split must be >= 2");
    detail::require(min_samples_leaf >= 1, "GbmConfig: min_samples_leaf must be >= 1");
    detail::require(subsample > 0 && subsample <= 1, "GbmConfig: subsample in (0,1]");
    detail::require(colsample > 0 && colsample <= 1, "GbmConfig: colsample in (0,1]");
    detail::require(min_child_weight >= 0, "GbmConfig: min_child_weight must be >= 0");
    detail::require(reg_lambda >= 0, "GbmConfig: reg_lambda must be >= 0");
    detail::require(max_leaves >= 2, "GbmConfig: max_leaves must be >= 2");
  }
};

/// Second-order, level-wise booster with the XGBoost-row settings.
inline GbmConfig xgboost_defaults() {
  GbmConfig c;
  c.n_estimators = 157;
  c.max_depth = 3;
  c.learning_rate = 0.20;
  c.subsample = 0.73;
  c.colsample = 0.88;
  c.min_child_weight = 0.1;
  c.reg_lambda = 1.0;
  c.objective_order = ObjectiveOrder::Second;
  c.growth = Growth::LevelWise;
  return c;
}

/// Second-order, leaf-wise booster with the LightGBM-row settings.
/// min_samples_leaf 20 and max_leaves 31 mirror that library's defaults.
inline GbmConfig lightgbm_defaults() {
  GbmConfig c;
  c.n_estimators = 279;
  c.max_depth = 8;
  c.learning_rate = 0.17;
  c.subsample = 0.83;
  c.colsample = 0.75;
  c.min_child_weight = 0.01;
  c.reg_lambda = 0.0;
  c.min_samples_leaf = 20;
  c.max_leaves = 31;
  c.objective_order = ObjectiveOrder::Second;
  c.growth = Growth::LeafWise;
  return c;
}

/// Classic first-order gradient boosting.
inline GbmConfig classic_gbm_defaults() {
  GbmConfig c;
  c.n_estimators = 259;
  c.max_depth = 3;
  c.learning_rate = 0.10;
  c.min_samples_split = 8;
  c.objective_order = ObjectiveOrder::First;
  c.growth = Growth::LevelWise;
  return c;
}

struct RandomForest {
  std::vector<RegressionTree> trees;
  bool operator==(const RandomForest&) const = default;
};

struct GbmModel {
  double base_prediction = 0.0;
  double learning_rate = 1.0;
  std::vector<RegressionTree> trees;
  bool operator==(const GbmModel&) const = default;
};

namespace detail {

/// Greedy tree growth over per-row gradient/hessian statistics.
///
/// Node score for a row set is G^2 / (H + lambda) and the leaf value is
/// -G / (H + lambda). With g = -w*y, h = w and lambda = 0 the split score is
/// exactly the weighted SSE reduction and the leaf value the weighted mean,
/// i.e. plain CART.
class TreeGrower {
 public:
  struct Params {
    int max_depth = kUnlimitedDepth;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    double reg_lambda = 0.0;
    double min_child_weight = 0.0;
    int max_leaves = std::numeric_limits<int>::max();
    Growth growth = Growth::LevelWise;
  };

  TreeGrower(const Eigen::MatrixXd& xs, std::span<const double> grad, std::span<const double> hess,
             std::span<const double> purity_targets, std::vector<int> features, Params params)
      : xs_(xs),
        grad_(grad),
        hess_(hess),
        purity_(purity_targets),
        features_(std::move(features)),
        p_(params) {}

  RegressionTree grow(std::vector<Eigen::Index> rows) {
    tree_.nodes.clear();
    if (p_.growth == Growth::LevelWise) {
      grow_level(std::move(rows), 0);
    } else {
      grow_leafwise(std::move(rows));
    }
    return std::move(tree_);
  }

 private:
  struct Split {
    double score = 0.0;
    int feature = -1;
    double threshold = 0.0;
    std::vector<Eigen::Index> left, right;
  };

  double leaf_value(const std::vector<Eigen::Index>& rows) const {
    double g = 0.0, h = 0.0;
    for (auto r : rows) {
      g += grad_[static_cast<std::size_t>(r)];
      h += hess_[static_cast<std::size_t>(r)];
    }
    const double denom = h + p_.reg_lambda;
    return denom > 0.0 ? -g / denom : 0.0;
  }

  bool is_pure(const std::vector<Eigen::Index>& rows) const {
    if (purity_.empty()) return false;
    const double first = purity_[static_cast<std::size_t>(rows.front())];
    return std::all_of(rows.begin(), rows.end(), [&](Eigen::Index r) {
      return purity_[static_cast<std::size_t>(r)] == first;
    });
  }

  std::optional<Split> best_split(const std::vector<Eigen::Index>& rows, int depth) const {
    const auto m = static_cast<int>(rows.size());
    if (depth >= p_.max_depth || m < p_.min_samples_split || m < 2 * p_.min_samples_leaf) {
      return std::nullopt;
    }
    if (is_pure(rows)) return std::nullopt;

    double g_all = 0.0, h_all = 0.0;
    for (auto r : rows) {
      g_all += grad_[static_cast<std::size_t>(r)];
      h_all += hess_[static_cast<std::size_t>(r)];
    }
    const double lam = p_.reg_lambda;
    const double parent = g_all * g_all / (h_all + lam);

    std::optional<Split> best;
    std::vector<Eigen::Index> order(rows);
    for (int f : features_) {
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return xs_(a, f) < xs_(b, f); });
      double gl = 0.0, hl = 0.0;
      for (int i = 0; i + 1 < m; ++i) {
        const auto r = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
        gl += grad_[r];
        hl += hess_[r];
        const double lo = xs_(order[static_cast<std::size_t>(i)], f);
        const double hi = xs_(order[static_cast<std::size_t>(i) + 1], f);
        if (!(lo < hi)) continue;
        const int nl = i + 1;
        if (nl < p_.min_samples_leaf || m - nl < p_.min_samples_leaf) continue;
        const double gr = g_all - gl, hr = h_all - hl;
        if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
        if (hl + lam <= 0.0 || hr + lam <= 0.0) continue;
        const double score = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent;
        if (!(score > 0.0)) continue;
        if (best && !(score > best->score)) continue;
        double t = lo + (hi - lo) / 2.0;
        if (!(t > lo)) t = hi;
        if (!best) best.emplace();
        best->score = score;
        best->feature = f;
        best->threshold = t;
      }
    }
    if (best) {
      for (auto r : rows) {
        (xs_(r, best->feature) < best->threshold ? best->left : best->right).push_back(r);
      }
    }
    return best;
  }

  int add_leaf(const std::vector<Eigen::Index>& rows) {
    TreeNode n;
    n.value = leaf_value(rows);
    n.n_samples = static_cast<int>(rows.size());
    tree_.nodes.push_back(n);
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  void make_internal(int at, const Split& s) {
    auto& n = tree_.nodes[static_cast<std::size_t>(at)];
    n.feature = s.feature;
    n.threshold = s.threshold;
  }

  int grow_level(std::vector<Eigen::Index> rows, int depth) {
    const int at = add_leaf(rows);
    auto s = best_split(rows, depth);
    if (!s) return at;
    make_internal(at, *s);
    const int l = grow_level(std::move(s->left), depth + 1);
    const int r = grow_level(std::move(s->right), depth + 1);
    tree_.nodes[static_cast<std::size_t>(at)].left = l;
    tree_.nodes[static_cast<std::size_t>(at)].right = r;
    return at;
  }

  void grow_leafwise(std::vector<Eigen::Index> rows) {
    struct Pending {
      double score;
      int node;
      int depth;
      Split split;
    };
    // Max score first; among equal scores the earlier-created node.
    auto cmp = [](const Pending& a, const Pending& b) {
      if (a.score != b.score) return a.score < b.score;
      return a.node > b.node;
    };
    std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> open(cmp);
    auto consider = [&](std::vector<Eigen::Index> r, int depth) {
      const int at = add_leaf(r);
      if (auto s = best_split(r, depth)) open.push({s->score, at, depth, std::move(*s)});
      return at;
    };
    consider(std::move(rows), 0);
    std::size_t leaves = 1;
    while (!open.empty() && leaves < static_cast<std::size_t>(p_.max_leaves)) {
      Pending top = open.top();
      open.pop();
      make_internal(top.node, top.split);
      const int l = consider(std::move(top.split.left), top.depth + 1);
      const int r = consider(std::move(top.split.right), top.depth + 1);
      tree_.nodes[static_cast<std::size_t>(top.node)].left = l;
      tree_.nodes[static_cast<std::size_t>(top.node)].right = r;
      ++leaves;
    }
  }

  const Eigen::MatrixXd& xs_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::span<const double> purity_;
  std::vector<int> features_;
  Params p_;
  RegressionTree tree_;
};

inline std::vector<int> all_features(Eigen::Index d) {
  std::vector<int> f(static_cast<std::size_t>(d));
  std::iota(f.begin(), f.end(), 0);
  return f;
}

inline std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), Eigen::Index{0});
  return r;
}

inline RegressionTree fit_cart_rows(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                    std::span<const double> weights,
                                    std::vector<Eigen::Index> rows, const TreeConfig& cfg) {
  const auto n = static_cast<std::size_t>(ys.size());
  std::vector<double> g(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    g[i] = -w * ys(static_cast<Eigen::Index>(i));
    h[i] = w;
  }
  TreeGrower::Params p;
  p.max_depth = cfg.max_depth;
  p.min_samples_split = cfg.min_samples_split;
  p.min_samples_leaf = cfg.min_samples_leaf;
  TreeGrower grower(xs, g, h, std::span<const double>(ys.data(), n), all_features(xs.cols()), p);
  return grower.grow(std::move(rows));
}

inline void check_xy(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, const char* who) {
  require(xs.rows() == ys.size(), std::string(who) + ": xs rows != ys length");
  require(ys.size() >= 1, std::string(who) + ": need at least one sample");
  require(xs.cols() >= 1, std::string(who) + ": need at least one feature");
}

}  // namespace detail

/// CART regression tree: greedy splits maximizing (weighted) SSE reduction,
/// thresholds at midpoints between consecutive distinct values, ties resolved
/// toward the smallest (feature, threshold).
inline RegressionTree fit_tree(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                               const TreeConfig& cfg = {},
                               std::span<const double> sample_weights = {}) {
  detail::check_xy(xs, ys, "fit_tree");
  cfg.validate();
  detail::require(sample_weights.empty() ||
                      sample_weights.size() == static_cast<std::size_t>(ys.size()),
                  "fit_tree: sample_weights length mismatch");
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ys.size(); ++i) {
    if (sample_weights.empty() || sample_weights[static_cast<std::size_t>(i)] > 0.0) {
      rows.push_back(i);
    }
  }
  detail::require(!rows.empty(), "fit_tree: all sample weights are zero");
  return detail::fit_cart_rows(xs, ys, sample_weights, std::move(rows), cfg);
}

inline Eigen::VectorXd predict_tree(const RegressionTree& tree, const Eigen::MatrixXd& xs) {
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out(i) = tree.predict_row(xs.row(i));
  return out;
}

/// Bagged CART ensemble. Tree i trains on a bootstrap draw seeded from
/// (seed, i), so trees are independent of fitting order.
inline RandomForest fit_random_forest(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                      const ForestConfig& cfg = {}) {
  detail::check_xy(xs, ys, "fit_random_forest");
  cfg.validate();
  const Eigen::Index n = ys.size();
  RandomForest forest;
  forest.trees.reserve(static_cast<std::size_t>(cfg.n_estimators));
  for (int t = 0; t < cfg.n_estimators; ++t) {
    std::vector<Eigen::Index> rows;
    if (cfg.bootstrap) {
      Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(t));
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      rows.resize(static_cast<std::size_t>(n));
      for (auto& r : rows) r = pick(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = detail::all_rows(n);
    }
    forest.trees.push_back(detail::fit_cart_rows(xs, ys, {}, std::move(rows), cfg.tree));
  }
  return forest;
}

inline Eigen::VectorXd predict_forest(const RandomForest& forest, const Eigen::MatrixXd& xs) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(xs.rows());
  for (const auto& t : forest.trees) sum += predict_tree(t, xs);
  return sum / static_cast<double>(forest.trees.size());
}

inline Eigen::VectorXd predict_gbm(const GbmModel& model, const Eigen::MatrixXd& xs) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(xs.rows(), model.base_prediction);
  for (const auto& t : model.trees) out += model.learning_rate * predict_tree(t, xs);
  return out;
}

/// Gradient boosting with squared loss (g = -residual, h = 1). First order
/// grows plain CART on residuals; second order uses regularized G/H gains with
/// the min_child_weight constraint. Each round may subsample rows (without
/// replacement) and columns from streams seeded by (seed, round).
inline GbmModel fit_gbm(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                        const GbmConfig& cfg) {
  detail::check_xy(xs, ys, "fit_gbm");
  cfg.validate();
  const Eigen::Index n = ys.size();
  const Eigen::Index d = xs.cols();
  const bool second = cfg.objective_order == ObjectiveOrder::Second;

  GbmModel model;
  model.base_prediction = ys.mean();
  model.learning_rate = cfg.learning_rate;
  model.trees.reserve(static_cast<std::size_t>(cfg.n_estimators));

  detail::TreeGrower::Params p;
  p.max_depth = cfg.max_depth;
  p.min_samples_split = cfg.min_samples_split;
  p.min_samples_leaf = cfg.min_samples_leaf;
  p.reg_lambda = second ? cfg.reg_lambda : 0.0;
  p.min_child_weight = second ? cfg.min_child_weight : 0.0;
  p.growth = cfg.growth;
  if (cfg.growth == Growth::LeafWise) p.max_leaves = cfg.max_leaves;

  const auto n_rows = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(cfg.subsample * static_cast<double>(n))));
  const auto n_cols = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(cfg.colsample * static_cast<double>(d))));

  Eigen::VectorXd current = Eigen::VectorXd::Constant(n, model.base_prediction);
  std::vector<double> grad(static_cast<std::size_t>(n)), hess(static_cast<std::size_t>(n), 1.0),
      resid(static_cast<std::size_t>(n));
  for (int m = 0; m < cfg.n_estimators; ++m) {
    const std::uint64_t round_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(m));
    for (Eigen::Index i = 0; i < n; ++i) {
      resid[static_cast<std::size_t>(i)] = ys(i) - current(i);
      grad[static_cast<std::size_t>(i)] = -resid[static_cast<std::size_t>(i)];
    }

    std::vector<Eigen::Index> rows = detail::all_rows(n);
    if (n_rows < n) {
      Rng rng = make_rng(round_seed, 0);
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(static_cast<std::size_t>(n_rows));
      std::sort(rows.begin(), rows.end());
    }
    std::vector<int> features = detail::all_features(d);
    if (n_cols < d) {
      Rng rng = make_rng(round_seed, 1);
      std::shuffle(features.begin(), features.end(), rng);
      features.resize(static_cast<std::size_t>(n_cols));
      std::sort(features.begin(), features.end());
    }

    std::span<const double> purity = second ? std::span<const double>{} : std::span<const double>(resid);
    detail::TreeGrower grower(xs, grad, hess, purity, std::move(features), p);
    RegressionTree tree = grower.grow(std::move(rows));
    if (tree.nodes.size() == 1) tree.nodes.front().value = 0.0;
    current += cfg.learning_rate * predict_tree(tree, xs);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace extrap
