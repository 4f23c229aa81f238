#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "extrap/errors.hpp"

namespace extrap {

enum class KnnWeighting { Uniform, InverseDistance };
enum class KnnSearch { Linear, Sorted1d, BallTree };

struct KnnConfig {
  int k = 2;
  KnnWeighting weighting = KnnWeighting::InverseDistance;
  KnnSearch search = KnnSearch::BallTree;
};

/// A neighbor candidate. Ordered by distance, then by training index, which
/// is also the tie rule at the k-th position.
struct Neighbor {
  double distance;
  Eigen::Index index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
  }
};

namespace detail {

template <class A, class B>
double euclidean(const A& a, const B& b) {
  return std::sqrt((a - b).squaredNorm());
}

/// Ball tree over the stored rows. Leaves hold at most kLeafSize points;
/// internal nodes split at the median of the widest-spread coordinate.
class BallTree {
 public:
  static constexpr Eigen::Index kLeafSize = 16;

  explicit BallTree(const Eigen::MatrixXd& pts) : pts_(&pts) {
    order_.resize(static_cast<std::size_t>(pts.rows()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    if (!order_.empty()) build(0, static_cast<Eigen::Index>(order_.size()));
  }

  std::vector<Neighbor> query(const Eigen::RowVectorXd& q, int k) const {
    std::vector<Neighbor> heap;  // max-heap on (distance, index)
    heap.reserve(static_cast<std::size_t>(k) + 1);
    search(0, q, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  std::size_t n_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::RowVectorXd center;
    double radius = 0.0;
    Eigen::Index begin = 0, end = 0;
    int left = -1, right = -1;
  };

  int build(Eigen::Index begin, Eigen::Index end) {
    const Eigen::MatrixXd& p = *pts_;
    Node node;
    node.begin = begin;
    node.end = end;
    node.center = Eigen::RowVectorXd::Zero(p.cols());
    for (Eigen::Index i = begin; i < end; ++i) node.center += p.row(at(i));
    node.center /= static_cast<double>(end - begin);
    for (Eigen::Index i = begin; i < end; ++i) {
      node.radius = std::max(node.radius, euclidean(p.row(at(i)), node.center));
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    Eigen::Index dim = 0;
    double widest = -1.0;
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      double lo = p(at(begin), c), hi = lo;
      for (Eigen::Index i = begin; i < end; ++i) {
        lo = std::min(lo, p(at(i), c));
        hi = std::max(hi, p(at(i), c));
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        dim = c;
      }
    }
    const Eigen::Index mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                       return p(a, dim) != p(b, dim) ? p(a, dim) < p(b, dim) : a < b;
                     });
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  Eigen::Index at(Eigen::Index i) const { return order_[static_cast<std::size_t>(i)]; }

  // Lower bound on the distance from q to any point in the ball. Pruning is
  // strict and slightly inflated so rounding never drops a tied neighbor.
  bool prunable(int id, const Eigen::RowVectorXd& q, const std::vector<Neighbor>& heap,
                int k) const {
    if (static_cast<int>(heap.size()) < k) return false;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const double bound = euclidean(q, n.center) - n.radius;
    const double worst = heap.front().distance;
    return bound > worst * (1.0 + 1e-12) + 1e-300;
  }

  void search(int id, const Eigen::RowVectorXd& q, int k, std::vector<Neighbor>& heap) const {
    if (prunable(id, q, heap, k)) return;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.left < 0) {
      for (Eigen::Index i = n.begin; i < n.end; ++i) {
        Neighbor cand{euclidean(q, pts_->row(at(i))), at(i)};
        if (static_cast<int>(heap.size()) < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    // Visit the nearer child first.
    const Node& l = nodes_[static_cast<std::size_t>(n.left)];
    const Node& r = nodes_[static_cast<std::size_t>(n.right)];
    const bool left_first = euclidean(q, l.center) <= euclidean(q, r.center);
    search(left_first ? n.left : n.right, q, k, heap);
    search(left_first ? n.right : n.left, q, k, heap);
  }

  const Eigen::MatrixXd* pts_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace detail

/// Stored training data plus the configured search index.
class KnnModel {
 public:
  KnnModel(Eigen::MatrixXd xs, Eigen::VectorXd ys, KnnConfig cfg)
      : xs_(std::make_shared<const Eigen::MatrixXd>(std::move(xs))),
        ys_(std::move(ys)),
        cfg_(cfg) {
    if (cfg_.search == KnnSearch::Sorted1d) {
      detail::require(xs_->cols() == 1, "KnnModel: sorted-1d search needs one feature");
      sorted_.resize(static_cast<std::size_t>(xs_->rows()));
      std::iota(sorted_.begin(), sorted_.end(), Eigen::Index{0});
      std::sort(sorted_.begin(), sorted_.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double xa = (*xs_)(a, 0), xb = (*xs_)(b, 0);
        return xa != xb ? xa < xb : a < b;
      });
    } else if (cfg_.search == KnnSearch::BallTree) {
      ball_ = std::make_shared<const detail::BallTree>(*xs_);
    }
  }

  const KnnConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& xs() const { return *xs_; }
  const Eigen::VectorXd& ys() const { return ys_; }

  /// The k nearest training rows sorted by (distance, index).
  std::vector<Neighbor> neighbors(const Eigen::RowVectorXd& q) const {
    switch (cfg_.search) {
      case KnnSearch::Linear: return linear(q);
      case KnnSearch::Sorted1d: return sorted(q(0));
      case KnnSearch::BallTree: return ball_->query(q, cfg_.k);
    }
    return {};
  }

  double predict_row(const Eigen::RowVectorXd& q) const {
    const auto nb = neighbors(q);
    if (cfg_.weighting == KnnWeighting::Uniform) {
      double s = 0.0;
      for (const auto& n : nb) s += ys_(n.index);
      return s / static_cast<double>(nb.size());
    }
    double exact = 0.0;
    int n_exact = 0;
    for (const auto& n : nb) {
      if (n.distance == 0.0) {
        exact += ys_(n.index);
        ++n_exact;
      }
    }
    if (n_exact > 0) return exact / n_exact;
    double num = 0.0, den = 0.0;
    for (const auto& n : nb) {
      num += ys_(n.index) / n.distance;
      den += 1.0 / n.distance;
    }
    return num / den;
  }

 private:
  std::vector<Neighbor> linear(const Eigen::RowVectorXd& q) const {
    std::vector<Neighbor> all(static_cast<std::size_t>(xs_->rows()));
    for (Eigen::Index i = 0; i < xs_->rows(); ++i) {
      all[static_cast<std::size_t>(i)] = {detail::euclidean(q, xs_->row(i)), i};
    }
    const auto k = static_cast<std::ptrdiff_t>(cfg_.k);
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    all.resize(static_cast<std::size_t>(k));
    return all;
  }

  // Two-pointer walk outward from the insertion point. Keeps collecting while
  // the next candidate is no farther than the current k-th, so index ties are
  // resolved by the final sort rather than by walk order.
  std::vector<Neighbor> sorted(double x) const {
    const Eigen::MatrixXd& p = *xs_;
    auto dist = [&](std::ptrdiff_t pos) {
      const Eigen::Index i = sorted_[static_cast<std::size_t>(pos)];
      Eigen::RowVectorXd q(1);
      q(0) = x;
      return Neighbor{detail::euclidean(q, p.row(i)), i};
    };
    const auto n = static_cast<std::ptrdiff_t>(sorted_.size());
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x,
                               [&](Eigen::Index i, double v) { return p(i, 0) < v; });
    std::ptrdiff_t right = it - sorted_.begin();
    std::ptrdiff_t left = right - 1;
    std::vector<Neighbor> got;
    while (left >= 0 || right < n) {
      std::optional<Neighbor> l, r;
      if (left >= 0) l = dist(left);
      if (right < n) r = dist(right);
      const bool take_left = l && (!r || l->distance <= r->distance);
      const Neighbor cand = take_left ? *l : *r;
      if (static_cast<int>(got.size()) >= cfg_.k && cand.distance > got.back().distance) break;
      got.push_back(cand);
      take_left ? --left : ++right;
    }
    std::sort(got.begin(), got.end());
    got.resize(static_cast<std::size_t>(cfg_.k));
    return got;
  }

  std::shared_ptr<const Eigen::MatrixXd> xs_;
  Eigen::VectorXd ys_;
  KnnConfig cfg_;
  std::vector<Eigen::Index> sorted_;
  std::shared_ptr<const detail::BallTree> ball_;
};

inline KnnModel fit_knn(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                        const KnnConfig& cfg = {}) {
  detail::require(xs.rows() == ys.size(), "fit_knn: xs rows != ys length");
  detail::require(cfg.k >= 1, "fit_knn: k must be >= 1");
  detail::require(cfg.k <= ys.size(), "fit_knn: k exceeds the number of samples");
  return KnnModel(xs, ys, cfg);
}

inline Eigen::VectorXd predict_knn(const KnnModel& model, const Eigen::MatrixXd& xs) {
  detail::require(xs.cols() == model.xs().cols(), "predict_knn: feature count mismatch");
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out(i) = model.predict_row(xs.row(i));
  return out;
}

}  // namespace extrap
