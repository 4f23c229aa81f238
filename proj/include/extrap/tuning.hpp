#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "extrap/errors.hpp"
#include "extrap/random.hpp"

namespace extrap {

using ParamValue = std::variant<std::int64_t, double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

struct IntRange {
  std::int64_t lo, hi;
};
enum class Scale { Linear, Log };
struct RealRange {
  double lo, hi;
  Scale scale = Scale::Linear;
};
struct Categorical {
  std::vector<std::string> values;
};

struct Dimension {
  std::string name;
  std::variant<IntRange, RealRange, Categorical> domain;
};

struct ParamSpace {
  std::vector<Dimension> dims;

  void validate() const {
    for (const auto& d : dims) {
      std::visit(
          [&](const auto& dom) {
            using T = std::decay_t<decltype(dom)>;
            if constexpr (std::is_same_v<T, Categorical>) {
              detail::require(!dom.values.empty(), "ParamSpace: empty categorical " + d.name);
            } else {
              detail::require(dom.lo <= dom.hi, "ParamSpace: lo > hi for " + d.name);
              if constexpr (std::is_same_v<T, RealRange>) {
                detail::require(dom.scale == Scale::Linear || dom.lo > 0,
                                "ParamSpace: log range must be positive for " + d.name);
              }
            }
          },
          d.domain);
    }
  }
};

struct CandidateConfig {
  ParamMap values;
  std::uint64_t seed = 0;
  std::size_t draw_index = 0;
};

inline std::int64_t get_int(const ParamMap& m, const std::string& key) {
  const auto it = m.find(key);
  detail::require(it != m.end(), "missing parameter: " + key);
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  if (const auto* d = std::get_if<double>(&it->second)) return std::llround(*d);
  throw InvalidArgument("parameter is not numeric: " + key);
}

inline double get_real(const ParamMap& m, const std::string& key) {
  const auto it = m.find(key);
  detail::require(it != m.end(), "missing parameter: " + key);
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw InvalidArgument("parameter is not numeric: " + key);
}

inline std::string get_str(const ParamMap& m, const std::string& key) {
  const auto it = m.find(key);
  detail::require(it != m.end(), "missing parameter: " + key);
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw InvalidArgument("parameter is not categorical: " + key);
}

/// n independent draws; draw i uses its own stream seeded by (seed, i).
/// Log-scale reals are uniform in the exponent.
inline std::vector<CandidateConfig> sample_configs(const ParamSpace& space, std::size_t n,
                                                   std::uint64_t seed) {
  detail::require(n >= 1, "sample_configs: n must be >= 1");
  space.validate();
  std::vector<CandidateConfig> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, i);
    CandidateConfig c;
    c.seed = seed;
    c.draw_index = i;
    for (const auto& d : space.dims) {
      c.values[d.name] = std::visit(
          [&](const auto& dom) -> ParamValue {
            using T = std::decay_t<decltype(dom)>;
            if constexpr (std::is_same_v<T, IntRange>) {
              return std::uniform_int_distribution<std::int64_t>(dom.lo, dom.hi)(rng);
            } else if constexpr (std::is_same_v<T, RealRange>) {
              if (dom.lo == dom.hi) return dom.lo;
              if (dom.scale == Scale::Log) {
                const double e = std::uniform_real_distribution<double>(std::log(dom.lo),
                                                                        std::log(dom.hi))(rng);
                return std::clamp(std::exp(e), dom.lo, dom.hi);
              }
              return std::uniform_real_distribution<double>(dom.lo, dom.hi)(rng);
            } else {
              std::uniform_int_distribution<std::size_t> pick(0, dom.values.size() - 1);
              return dom.values[pick(rng)];
            }
          },
          d.domain);
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// Shuffles [0, n) with the seeded generator and cuts it into k contiguous
/// folds; the first n % k folds get one extra index.
inline std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                         std::uint64_t seed) {
  detail::require(k >= 1, "kfold_split: k must be >= 1");
  detail::require(k <= n, "kfold_split: more folds than samples");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(at),
                    idx.begin() + static_cast<std::ptrdiff_t>(at + size));
    at += size;
  }
  return folds;
}

enum class ResourceKind { TrainingFraction, BoostingRounds, Epochs };

struct HalvingSpec {
  std::size_t n_initial = 81;
  int eta = 3;
  ResourceKind resource = ResourceKind::TrainingFraction;
  double min_resource = 1.0 / 81.0;
  double max_resource = 1.0;
  int cv_folds = 5;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(n_initial >= 1, "HalvingSpec: n_initial must be >= 1");
    detail::require(eta >= 2, "HalvingSpec: eta must be >= 2");
    detail::require(min_resource > 0 && min_resource <= max_resource,
                    "HalvingSpec: need 0 < min_resource <= max_resource");
    detail::require(cv_folds >= 2, "HalvingSpec: cv_folds must be >= 2");
  }
};

struct HyperbandSpec {
  int max_resource = 243;
  int eta = 3;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(eta >= 2, "HyperbandSpec: eta must be >= 2");
    detail::require(max_resource >= eta, "HyperbandSpec: max_resource must be >= eta");
  }
};

struct Evaluation {
  CandidateConfig candidate;
  double resource = 0.0;
  double score = 0.0;
  /// Hyperband bracket index s; 0 for plain successive halving.
  int bracket = 0;
  int rung = 0;
  std::string error;
};

struct TuneResult {
  CandidateConfig best;
  double best_score = std::numeric_limits<double>::infinity();
  double best_resource = 0.0;
  std::vector<Evaluation> history;
};

/// Lower is better. Must be deterministic for fixed arguments.
using Evaluator = std::function<double(const CandidateConfig&, double resource)>;

namespace detail {

inline double safe_score(const Evaluator& evaluate, const CandidateConfig& c, double resource,
                         std::string& error) {
  try {
    const double s = evaluate(c, resource);
    if (std::isnan(s)) {
      error = "evaluator returned NaN";
      return std::numeric_limits<double>::infinity();
    }
    return s;
  } catch (const std::exception& e) {
    error = e.what();
    return std::numeric_limits<double>::infinity();
  }
}

/// Plays one successive-halving tournament over `candidates` (in draw order).
/// Returns the final rung's evaluations, best first.
inline std::vector<Evaluation> run_halving(const Evaluator& evaluate,
                                           std::vector<CandidateConfig> candidates,
                                           double resource, double max_resource, int eta,
                                           int bracket, std::vector<Evaluation>& history) {
  std::vector<Evaluation> rung;
  for (int r = 0;; ++r) {
    rung.clear();
    for (auto& c : candidates) {
      Evaluation e;
      e.candidate = c;
      e.resource = resource;
      e.bracket = bracket;
      e.rung = r;
      e.score = safe_score(evaluate, c, resource, e.error);
      history.push_back(e);
      rung.push_back(std::move(e));
    }
    std::stable_sort(rung.begin(), rung.end(), [](const Evaluation& a, const Evaluation& b) {
      if (a.score != b.score) return a.score < b.score;
      return a.candidate.draw_index < b.candidate.draw_index;
    });
    if (rung.size() <= 1 || resource >= max_resource) break;
    const std::size_t keep = (rung.size() + static_cast<std::size_t>(eta) - 1) /
                             static_cast<std::size_t>(eta);
    candidates.clear();
    for (std::size_t i = 0; i < keep; ++i) candidates.push_back(rung[i].candidate);
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.draw_index < b.draw_index; });
    resource *= eta;
    if (resource >= max_resource * (1.0 - 1e-9)) resource = max_resource;
  }
  return rung;
}

}  // namespace detail

/// Random search with successive halving: n_initial draws at min_resource,
/// then keep the best ceil(n / eta) and multiply the resource by eta until one
/// candidate remains or the resource cap has been evaluated.
inline TuneResult successive_halving(const Evaluator& evaluate, const ParamSpace& space,
                                     const HalvingSpec& spec) {
  spec.validate();
  TuneResult out;
  auto final_rung =
      detail::run_halving(evaluate, sample_configs(space, spec.n_initial, spec.seed),
                          spec.min_resource, spec.max_resource, spec.eta, 0, out.history);
  out.best = final_rung.front().candidate;
  out.best_score = final_rung.front().score;
  out.best_resource = final_rung.front().resource;
  return out;
}

struct Bracket {
  int s;
  std::size_t n;
  double r;
};

/// s_max = floor(log_eta R); bracket s starts ceil((s_max+1)/(s+1) * eta^s)
/// candidates at R * eta^-s.
inline std::vector<Bracket> hyperband_brackets(const HyperbandSpec& spec) {
  spec.validate();
  int s_max = 0;
  for (std::int64_t p = spec.eta; p <= spec.max_resource; p *= spec.eta) ++s_max;
  std::vector<Bracket> out;
  for (int s = s_max; s >= 0; --s) {
    std::int64_t eta_s = 1;
    for (int i = 0; i < s; ++i) eta_s *= spec.eta;
    // ceil((s_max + 1) * eta^s / (s + 1)) in integers
    const auto num = static_cast<std::int64_t>(s_max + 1) * eta_s;
    const auto n = static_cast<std::size_t>((num + s) / (s + 1));
    out.push_back({s, n, static_cast<double>(spec.max_resource) / static_cast<double>(eta_s)});
  }
  return out;
}

/// Hyperband over integer resources (epochs). Each bracket samples fresh
/// candidates from a stream seeded by (seed, s); the winner is the best
/// evaluation at the maximum resource across all brackets.
inline TuneResult hyperband(const Evaluator& evaluate, const ParamSpace& space,
                            const HyperbandSpec& spec) {
  spec.validate();
  TuneResult out;
  const auto max_r = static_cast<double>(spec.max_resource);
  for (const auto& b : hyperband_brackets(spec)) {
    auto cands = sample_configs(space, b.n, derive_seed(spec.seed, static_cast<std::uint64_t>(b.s)));
    detail::run_halving(evaluate, std::move(cands), b.r, max_r, spec.eta, b.s, out.history);
  }
  for (const auto& e : out.history) {
    if (e.resource >= max_r && (out.best_resource < max_r || e.score < out.best_score)) {
      out.best = e.candidate;
      out.best_score = e.score;
      out.best_resource = e.resource;
    }
  }
  return out;
}

}  // namespace extrap
