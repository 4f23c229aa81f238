#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "extrap/dataset.hpp"
#include "extrap/errors.hpp"
#include "extrap/knn.hpp"
#include "extrap/linear_models.hpp"
#include "extrap/neural.hpp"
#include "extrap/tree_models.hpp"
#include "extrap/tuning.hpp"

namespace extrap {

/// The ten regressors of the comparison, in table order.
enum class ModelKind {
  Dnn,
  XGBoost,
  LightGbm,
  GradientBoosting,
  RandomForest,
  Knn,
  Linear,
  Huber,
  Ridge,
  BayesianRidge,
};

inline constexpr std::array<ModelKind, 10> kAllModels{
    ModelKind::Dnn,         ModelKind::XGBoost, ModelKind::LightGbm, ModelKind::GradientBoosting,
    ModelKind::RandomForest, ModelKind::Knn,    ModelKind::Linear,   ModelKind::Huber,
    ModelKind::Ridge,       ModelKind::BayesianRidge};

enum class ModelFamily { Neural, Tree, Neighbors, Linear };

struct ModelInfo {
  ModelKind kind;
  std::string_view id;
  std::string_view display;
  ModelFamily family;
};

inline constexpr std::array<ModelInfo, 10> kModelInfo{{
    {ModelKind::Dnn, "dnn", "Deep Neural Network", ModelFamily::Neural},
    {ModelKind::XGBoost, "xgboost", "XGBoost", ModelFamily::Tree},
    {ModelKind::LightGbm, "lightgbm", "LightGBM", ModelFamily::Tree},
    {ModelKind::GradientBoosting, "gradient_boosting", "Gradient Boosting", ModelFamily::Tree},
    {ModelKind::RandomForest, "random_forest", "Random Forest", ModelFamily::Tree},
    {ModelKind::Knn, "knn", "KNN Regression", ModelFamily::Neighbors},
    {ModelKind::Linear, "linear", "Linear Regression", ModelFamily::Linear},
    {ModelKind::Huber, "huber", "Huber Regression", ModelFamily::Linear},
    {ModelKind::Ridge, "ridge", "Ridge Regression", ModelFamily::Linear},
    {ModelKind::BayesianRidge, "bayesian_ridge", "Bayesian Ridge Regression", ModelFamily::Linear},
}};

inline const ModelInfo& info(ModelKind k) {
  return kModelInfo[static_cast<std::size_t>(k)];
}

inline std::optional<ModelKind> parse_model(std::string_view id) {
  for (const auto& m : kModelInfo)
    if (m.id == id) return m.kind;
  return std::nullopt;
}

/// Tree-family and neighbor models plateau beyond the training range.
inline bool plateaus(ModelKind k) {
  const auto f = info(k).family;
  return f == ModelFamily::Tree || f == ModelFamily::Neighbors;
}

/// Fixed hyperparameters used in defaults mode.
inline ParamMap default_params(ModelKind k) {
  using I = std::int64_t;
  switch (k) {
    case ModelKind::Dnn:
      return {{"units_1", I{512}}, {"units_2", I{448}}, {"learning_rate", 0.01}};
    case ModelKind::XGBoost:
      return {{"n_estimators", I{157}}, {"max_depth", I{3}},         {"learning_rate", 0.20},
              {"subsample", 0.73},      {"colsample_bytree", 0.88},  {"min_child_weight", 0.1}};
    case ModelKind::LightGbm:
      return {{"n_estimators", I{279}}, {"max_depth", I{8}},         {"learning_rate", 0.17},
              {"subsample", 0.83},      {"colsample_bytree", 0.75},  {"min_child_weight", 0.01}};
    case ModelKind::GradientBoosting:
      return {{"n_estimators", I{259}},
              {"max_depth", I{3}},
              {"learning_rate", 0.10},
              {"min_samples_split", I{8}}};
    case ModelKind::RandomForest:
      return {{"n_estimators", I{195}},
              {"max_depth", I{9}},
              {"min_samples_split", I{2}},
              {"min_samples_leaf", I{1}}};
    case ModelKind::Knn:
      return {{"n_neighbors", I{2}},
              {"weights", std::string("distance")},
              {"algorithm", std::string("ball_tree")}};
    case ModelKind::Linear:
      return {};
    case ModelKind::Huber:
      return {{"epsilon", 1.35}, {"alpha", 0.1}};
    case ModelKind::Ridge:
      return {{"alpha", 0.1}};
    case ModelKind::BayesianRidge:
      return {{"max_iter", I{100}}, {"alpha_1", 1e-7}, {"alpha_2", 1e-5},
              {"lambda_1", 1e-5},   {"lambda_2", 1e-7}};
  }
  return {};
}

/// Search spaces over the parameters that default_params pins.
inline ParamSpace search_space(ModelKind k) {
  const auto log_r = [](double lo, double hi) { return RealRange{lo, hi, Scale::Log}; };
  const auto lin_r = [](double lo, double hi) { return RealRange{lo, hi, Scale::Linear}; };
  switch (k) {
    case ModelKind::Dnn:
      return {{{"units_1", IntRange{32, 512}},
               {"units_2", IntRange{32, 512}},
               {"learning_rate", log_r(1e-4, 1e-1)}}};
    case ModelKind::XGBoost:
    case ModelKind::LightGbm:
      return {{{"n_estimators", IntRange{50, 300}},
               {"max_depth", IntRange{2, 10}},
               {"learning_rate", log_r(0.01, 0.3)},
               {"subsample", lin_r(0.5, 1.0)},
               {"colsample_bytree", lin_r(0.5, 1.0)},
               {"min_child_weight", log_r(0.001, 10.0)}}};
    case ModelKind::GradientBoosting:
      return {{{"n_estimators", IntRange{50, 300}},
               {"max_depth", IntRange{2, 8}},
               {"learning_rate", log_r(0.01, 0.3)},
               {"min_samples_split", IntRange{2, 20}}}};
    case ModelKind::RandomForest:
      return {{{"n_estimators", IntRange{50, 300}},
               {"max_depth", IntRange{3, 15}},
               {"min_samples_split", IntRange{2, 10}},
               {"min_samples_leaf", IntRange{1, 5}}}};
    case ModelKind::Knn:
      return {{{"n_neighbors", IntRange{1, 20}},
               {"weights", Categorical{{"uniform", "distance"}}},
               {"algorithm", Categorical{{"ball_tree"}}}}};
    case ModelKind::Linear:
      return {};
    case ModelKind::Huber:
      return {{{"epsilon", lin_r(1.1, 2.0)}, {"alpha", log_r(1e-4, 1.0)}}};
    case ModelKind::Ridge:
      return {{{"alpha", log_r(1e-4, 10.0)}}};
    case ModelKind::BayesianRidge:
      return {{{"max_iter", IntRange{100, 300}},
               {"alpha_1", log_r(1e-8, 1e-4)},
               {"alpha_2", log_r(1e-8, 1e-4)},
               {"lambda_1", log_r(1e-8, 1e-4)},
               {"lambda_2", log_r(1e-8, 1e-4)}}};
  }
  return {};
}

/// Training-protocol knobs of the network that are not searched.
struct MlpProtocol {
  int batch_size = 32;
  int max_epochs = 2000;
  int patience = 100;
  double val_fraction = 0.2;
};

using FittedModel = std::variant<LinearFit, BayesRidgeFit, RandomForest, GbmModel, KnnModel, TrainedMlp>;

inline KnnSearch parse_knn_search(const std::string& s) {
  if (s == "ball_tree" || s == "ball-tree") return KnnSearch::BallTree;
  if (s == "sorted_1d" || s == "sorted-1d") return KnnSearch::Sorted1d;
  if (s == "brute" || s == "linear") return KnnSearch::Linear;
  throw InvalidArgument("unknown knn algorithm: " + s);
}

inline KnnWeighting parse_knn_weighting(const std::string& s) {
  if (s == "distance") return KnnWeighting::InverseDistance;
  if (s == "uniform") return KnnWeighting::Uniform;
  throw InvalidArgument("unknown knn weighting: " + s);
}

inline GbmConfig gbm_config(ModelKind k, const ParamMap& p, std::uint64_t seed) {
  GbmConfig c = k == ModelKind::XGBoost    ? xgboost_defaults()
                : k == ModelKind::LightGbm ? lightgbm_defaults()
                                           : classic_gbm_defaults();
  c.n_estimators = static_cast<int>(get_int(p, "n_estimators"));
  c.max_depth = static_cast<int>(get_int(p, "max_depth"));
  c.learning_rate = get_real(p, "learning_rate");
  if (k == ModelKind::GradientBoosting) {
    c.min_samples_split = static_cast<int>(get_int(p, "min_samples_split"));
  } else {
    c.subsample = get_real(p, "subsample");
    c.colsample = get_real(p, "colsample_bytree");
    c.min_child_weight = get_real(p, "min_child_weight");
  }
  c.seed = seed;
  return c;
}

inline MlpConfig mlp_config(const ParamMap& p, const MlpProtocol& proto, std::uint64_t seed) {
  MlpConfig c;
  c.hidden_widths = {static_cast<int>(get_int(p, "units_1")), static_cast<int>(get_int(p, "units_2"))};
  c.learning_rate = get_real(p, "learning_rate");
  c.batch_size = proto.batch_size;
  c.max_epochs = proto.max_epochs;
  c.patience = proto.patience;
  c.val_fraction = proto.val_fraction;
  c.seed = seed;
  return c;
}

/// Fits model `k` with parameters `p` on `data`.
inline FittedModel fit_model(ModelKind k, const ParamMap& p, const SampleSet& data,
                             std::uint64_t seed, const MlpProtocol& proto = {}) {
  data.validate();
  const auto& xs = data.xs;
  const auto& ys = data.ys;
  switch (k) {
    case ModelKind::Dnn:
      return train_mlp(data, mlp_config(p, proto, seed));
    case ModelKind::XGBoost:
    case ModelKind::LightGbm:
    case ModelKind::GradientBoosting:
      return fit_gbm(xs, ys, gbm_config(k, p, seed));
    case ModelKind::RandomForest: {
      ForestConfig c;
      c.n_estimators = static_cast<int>(get_int(p, "n_estimators"));
      c.tree.max_depth = static_cast<int>(get_int(p, "max_depth"));
      c.tree.min_samples_split = static_cast<int>(get_int(p, "min_samples_split"));
      c.tree.min_samples_leaf = static_cast<int>(get_int(p, "min_samples_leaf"));
      c.seed = seed;
      return fit_random_forest(xs, ys, c);
    }
    case ModelKind::Knn: {
      KnnConfig c;
      c.k = static_cast<int>(get_int(p, "n_neighbors"));
      c.weighting = parse_knn_weighting(get_str(p, "weights"));
      c.search = parse_knn_search(get_str(p, "algorithm"));
      return fit_knn(xs, ys, c);
    }
    case ModelKind::Linear:
      return fit_ols(xs, ys);
    case ModelKind::Huber: {
      HuberConfig c;
      c.epsilon = get_real(p, "epsilon");
      c.alpha = get_real(p, "alpha");
      return fit_huber(xs, ys, c);
    }
    case ModelKind::Ridge:
      return fit_ridge(xs, ys, RidgeConfig{get_real(p, "alpha")});
    case ModelKind::BayesianRidge: {
      BayesRidgeConfig c;
      c.max_iter = static_cast<int>(get_int(p, "max_iter"));
      c.alpha_1 = get_real(p, "alpha_1");
      c.alpha_2 = get_real(p, "alpha_2");
      c.lambda_1 = get_real(p, "lambda_1");
      c.lambda_2 = get_real(p, "lambda_2");
      return fit_bayesian_ridge(xs, ys, c);
    }
  }
  throw InvalidArgument("fit_model: unknown model kind");
}

inline Eigen::VectorXd predict(const FittedModel& m, const Eigen::MatrixXd& xs) {
  struct Visitor {
    const Eigen::MatrixXd& xs;
    Eigen::VectorXd operator()(const LinearFit& f) const { return predict_linear(f, xs); }
    Eigen::VectorXd operator()(const BayesRidgeFit& f) const {
      return predict_linear(f.as_linear(), xs);
    }
    Eigen::VectorXd operator()(const RandomForest& f) const { return predict_forest(f, xs); }
    Eigen::VectorXd operator()(const GbmModel& f) const { return predict_gbm(f, xs); }
    Eigen::VectorXd operator()(const KnnModel& f) const { return predict_knn(f, xs); }
    Eigen::VectorXd operator()(const TrainedMlp& f) const { return forward(f.model, xs); }
  };
  return std::visit(Visitor{xs}, m);
}

}  // namespace extrap
