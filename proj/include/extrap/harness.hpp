#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "extrap/dataset.hpp"
#include "extrap/errors.hpp"
#include "extrap/metrics.hpp"
#include "extrap/models.hpp"
#include "extrap/tuning.hpp"

namespace extrap {

enum class RunMode { Defaults, Tuned };

inline std::string_view to_string(RunMode m) { return m == RunMode::Tuned ? "tuned" : "defaults"; }

inline RunMode parse_mode(std::string_view s) {
  if (s == "defaults") return RunMode::Defaults;
  if (s == "tuned") return RunMode::Tuned;
  throw InvalidArgument("unknown mode: " + std::string(s) + " (expected tuned|defaults)");
}

struct TuningBudget {
  std::size_t n_initial = 81;
  int cv_folds = 5;
  int eta = 3;
  int hyperband_max_epochs = 243;
};

struct ExperimentConfig {
  std::string function = "expgrowth";
  SplitSpec split;
  std::vector<ModelKind> roster{kAllModels.begin(), kAllModels.end()};
  RunMode mode = RunMode::Defaults;
  std::map<ModelKind, RunMode> mode_overrides;
  TuningBudget budget;
  MlpProtocol mlp;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  double window_lo = 0.4;
  double window_hi = 1.0;
  int plot_points = 601;

  RunMode mode_for(ModelKind k) const {
    const auto it = mode_overrides.find(k);
    return it == mode_overrides.end() ? mode : it->second;
  }

  void validate() const {
    split.validate();
    detail::require(!roster.empty(), "ExperimentConfig: empty model roster");
    detail::require(window_lo < window_hi, "ExperimentConfig: empty plot window");
    detail::require(plot_points >= 2, "ExperimentConfig: plot_points must be >= 2");
    detail::require(budget.n_initial >= 1 && budget.cv_folds >= 2 && budget.eta >= 2 &&
                        budget.hyperband_max_epochs >= budget.eta,
                    "ExperimentConfig: invalid tuning budget");
  }
};

inline std::vector<ModelKind> parse_roster(std::string_view list) {
  std::vector<ModelKind> out;
  std::stringstream ss{std::string(list)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "all") {
      out.assign(kAllModels.begin(), kAllModels.end());
      continue;
    }
    const auto k = parse_model(item);
    if (!k) throw InvalidArgument("unknown model: " + item);
    if (std::find(out.begin(), out.end(), *k) == out.end()) out.push_back(*k);
  }
  if (out.empty()) throw InvalidArgument("empty model list");
  return out;
}

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw InvalidArgument("bad value for " + key + ": " + value);
  return out;
}

}  // namespace detail

/// Applies one `key = value` setting. Unknown keys are rejected.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "function") {
    lookup_function(value);
    cfg.function = value;
  } else if (key == "n_points") {
    cfg.split.n_points = parse_number<int>(key, value);
  } else if (key == "lo") {
    cfg.split.lo = parse_number<double>(key, value);
  } else if (key == "hi") {
    cfg.split.hi = parse_number<double>(key, value);
  } else if (key == "boundary") {
    cfg.split.boundary = parse_number<double>(key, value);
  } else if (key == "sampling") {
    if (value == "grid") cfg.split.mode = SamplingMode::Grid;
    else if (value == "uniform") cfg.split.mode = SamplingMode::UniformRandom;
    else throw InvalidArgument("bad value for sampling: " + value);
  } else if (key == "models") {
    cfg.roster = parse_roster(value);
  } else if (key == "mode") {
    cfg.mode = parse_mode(value);
  } else if (key.rfind("mode.", 0) == 0) {
    const auto k = parse_model(key.substr(5));
    if (!k) throw InvalidArgument("unknown model in key: " + key);
    cfg.mode_overrides[*k] = parse_mode(value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "n_initial") {
    cfg.budget.n_initial = parse_number<std::size_t>(key, value);
  } else if (key == "cv_folds") {
    cfg.budget.cv_folds = parse_number<int>(key, value);
  } else if (key == "eta") {
    cfg.budget.eta = parse_number<int>(key, value);
  } else if (key == "hyperband_max_epochs") {
    cfg.budget.hyperband_max_epochs = parse_number<int>(key, value);
  } else if (key == "dnn_batch_size") {
    cfg.mlp.batch_size = parse_number<int>(key, value);
  } else if (key == "dnn_max_epochs") {
    cfg.mlp.max_epochs = parse_number<int>(key, value);
  } else if (key == "dnn_patience") {
    cfg.mlp.patience = parse_number<int>(key, value);
  } else if (key == "dnn_val_fraction") {
    cfg.mlp.val_fraction = parse_number<double>(key, value);
  } else if (key == "window_lo") {
    cfg.window_lo = parse_number<double>(key, value);
  } else if (key == "window_hi") {
    cfg.window_hi = parse_number<double>(key, value);
  } else if (key == "plot_points") {
    cfg.plot_points = parse_number<int>(key, value);
  } else {
    throw InvalidArgument("unknown config key: " + key);
  }
}

/// Flat `key = value` document; `#` starts a comment.
inline void apply_config_text(ExperimentConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

struct PhaseTimes {
  double tune_s = 0.0;
  double fit_s = 0.0;
  double predict_s = 0.0;
};

struct ModelOutcome {
  ModelKind kind{};
  bool ok = false;
  std::string error;
  MetricsRow row;
  ParamMap params;
  Eigen::VectorXd train_pred;
  Eigen::VectorXd test_pred;
  Eigen::VectorXd curve_pred;
  PhaseTimes times;
  std::size_t tuning_evaluations = 0;
};

/// True function and per-model predictions on the plotting grid.
struct CurveSet {
  Eigen::VectorXd x;
  Eigen::VectorXd y_true;
  std::vector<std::pair<std::string, Eigen::VectorXd>> series;  // model id -> curve
};

struct RunReport {
  ExperimentConfig config;
  SplitDataset data;
  CurveSet curves;
  std::vector<ModelOutcome> models;

  std::vector<MetricsRow> rows() const {
    std::vector<MetricsRow> out;
    for (const auto& m : models)
      if (m.ok) out.push_back(m.row);
    return out;
  }

  const ModelOutcome* find(ModelKind k) const {
    for (const auto& m : models)
      if (m.kind == k) return &m;
    return nullptr;
  }

  bool all_ok() const {
    return std::all_of(models.begin(), models.end(), [](const auto& m) { return m.ok; });
  }
};

/// Observation points for tests: every SampleSet handed to tuning or fitting.
struct ExperimentHooks {
  std::function<void(ModelKind, std::string_view stage, const SampleSet&)> on_training_data;
};

inline std::uint64_t model_seed(std::uint64_t master, ModelKind k) {
  return derive_seed(master, 1000 + static_cast<std::uint64_t>(k));
}

namespace detail {

inline bool uses_boosting_rounds(ModelKind k) {
  return k == ModelKind::XGBoost || k == ModelKind::LightGbm || k == ModelKind::GradientBoosting;
}

inline int halving_rounds(std::size_t n, int eta) {
  int r = 0;
  for (std::size_t p = static_cast<std::size_t>(eta); p <= n; p *= static_cast<std::size_t>(eta)) ++r;
  return r;
}

/// Mean validation MSE across folds of `train`. The resource either caps the
/// number of boosting rounds or sets the fraction of each fold's training rows.
inline double cv_score(ModelKind k, const CandidateConfig& c, double resource, const SampleSet& train,
                       const std::vector<std::vector<std::size_t>>& folds, ResourceKind kind,
                       std::uint64_t seed) {
  ParamMap p = c.values;
  if (kind == ResourceKind::BoostingRounds) {
    const auto rounds = std::max<std::int64_t>(1, std::llround(resource));
    p["n_estimators"] = std::min(get_int(p, "n_estimators"), rounds);
  }
  double total = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<Eigen::Index> fit_rows, val_rows;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      auto& dst = g == f ? val_rows : fit_rows;
      for (auto i : folds[g]) dst.push_back(static_cast<Eigen::Index>(i));
    }
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    if (kind == ResourceKind::TrainingFraction && resource < 1.0) {
      const auto keep = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::llround(resource * static_cast<double>(fit_rows.size()))));
      if (keep < fit_rows.size()) {
        Rng rng = make_rng(seed, 7000 + f);
        std::shuffle(fit_rows.begin(), fit_rows.end(), rng);
        fit_rows.resize(keep);
        std::sort(fit_rows.begin(), fit_rows.end());
      }
    }
    const SampleSet fit_set = train.subset(fit_rows);
    const SampleSet val_set = train.subset(val_rows);
    const auto model = fit_model(k, p, fit_set, derive_seed(seed, f));
    const Eigen::VectorXd pred = predict(model, val_set.xs);
    total += (pred - val_set.ys).squaredNorm() / static_cast<double>(val_set.size());
  }
  return total / static_cast<double>(folds.size());
}

}  // namespace detail

/// Hyperparameter search on the training partition only: successive halving
/// with k-fold CV for the classical models, Hyperband over epochs for the MLP.
inline TuneResult tune_model(ModelKind k, const SampleSet& train, const ExperimentConfig& cfg) {
  const std::uint64_t seed = model_seed(cfg.seed, k);
  const ParamSpace space = search_space(k);
  if (space.dims.empty()) {
    TuneResult r;
    r.best_score = 0.0;
    return r;
  }
  if (k == ModelKind::Dnn) {
    HyperbandSpec spec;
    spec.max_resource = cfg.budget.hyperband_max_epochs;
    spec.eta = cfg.budget.eta;
    spec.seed = seed;
    const Evaluator eval = [&](const CandidateConfig& c, double epochs) {
      MlpProtocol proto = cfg.mlp;
      proto.max_epochs = std::max(1, static_cast<int>(std::llround(epochs)));
      return train_mlp(train, mlp_config(c.values, proto, derive_seed(seed, 1))).trace.best_val_loss;
    };
    return hyperband(eval, space, spec);
  }

  HalvingSpec spec;
  spec.n_initial = cfg.budget.n_initial;
  spec.eta = cfg.budget.eta;
  spec.cv_folds = cfg.budget.cv_folds;
  spec.seed = seed;
  const double shrink =
      std::pow(static_cast<double>(spec.eta), detail::halving_rounds(spec.n_initial, spec.eta));
  if (detail::uses_boosting_rounds(k)) {
    spec.resource = ResourceKind::BoostingRounds;
    const auto& range = std::get<IntRange>(space.dims.front().domain);
    spec.max_resource = static_cast<double>(range.hi);
    spec.min_resource = std::max(1.0, spec.max_resource / shrink);
  } else {
    spec.resource = ResourceKind::TrainingFraction;
    spec.max_resource = 1.0;
    spec.min_resource = 1.0 / shrink;
  }
  const auto folds = kfold_split(static_cast<std::size_t>(train.size()),
                                 static_cast<std::size_t>(spec.cv_folds), derive_seed(seed, 17));
  const Evaluator eval = [&](const CandidateConfig& c, double resource) {
    return detail::cv_score(k, c, resource, train, folds, spec.resource, derive_seed(seed, 23));
  };
  return successive_halving(eval, space, spec);
}

/// generate grid -> evaluate f -> split -> per model (tune on train, fit on
/// train, predict train/test/plot grid) -> metric rows. A failing model gets
/// a recorded error and the rest of the roster still runs.
inline RunReport run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks = {}) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  RunReport report;
  report.config = cfg;
  const TargetFunction f = lookup_function(cfg.function);
  SplitSpec spec = cfg.split;
  spec.seed = derive_seed(cfg.seed, 1);
  report.data = make_split_dataset(spec, f);
  report.curves.x = generate_grid(cfg.plot_points, cfg.window_lo, cfg.window_hi);
  report.curves.y_true = evaluate(f, report.curves.x);
  const Eigen::MatrixXd curve_xs = report.curves.x;
  const SampleSet& train = report.data.train;
  const SampleSet& test = report.data.test;

  for (ModelKind k : cfg.roster) {
    ModelOutcome o;
    o.kind = k;
    try {
      auto t0 = Clock::now();
      if (cfg.mode_for(k) == RunMode::Tuned) {
        if (hooks.on_training_data) hooks.on_training_data(k, "tune", train);
        const TuneResult tr = tune_model(k, train, cfg);
        o.params = tr.best.values;
        o.tuning_evaluations = tr.history.size();
      } else {
        o.params = default_params(k);
      }
      auto t1 = Clock::now();
      if (hooks.on_training_data) hooks.on_training_data(k, "fit", train);
      const FittedModel model = fit_model(k, o.params, train, model_seed(cfg.seed, k), cfg.mlp);
      auto t2 = Clock::now();
      o.train_pred = predict(model, train.xs);
      o.test_pred = predict(model, test.xs);
      o.curve_pred = predict(model, curve_xs);
      auto t3 = Clock::now();
      o.row = gap_row(std::string(info(k).display), train.ys, o.train_pred, test.ys, o.test_pred);
      o.times = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3)};
      o.ok = true;
      report.curves.series.emplace_back(std::string(info(k).id), o.curve_pred);
    } catch (const std::exception& e) {
      o.ok = false;
      o.error = e.what();
    }
    report.models.push_back(std::move(o));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

/// Two significant digits in scientific notation, e.g. "4.3E-03".
inline std::string sci2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1E", v);
  return buf;
}

inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RenderedTable {
  std::string text;
  std::string csv;
};

inline RenderedTable render_table(const std::vector<MetricsRow>& rows) {
  detail::require(!rows.empty(), "render_table: no rows");
  std::size_t name_w = 6;
  for (const auto& r : rows) name_w = std::max(name_w, r.model_name.size());

  std::ostringstream txt, csv;
  auto cell = [&](std::string_view s) {
    txt << "  ";
    txt.width(9);
    txt << std::right << s;
  };
  txt.width(static_cast<std::streamsize>(name_w));
  txt << std::left << "Model";
  for (const char* h : {"L1 Train", "L1 Test", "|dL1|", "L2 Train", "L2 Test", "|dL2|",
                        "Linf Train", "Linf Test", "|dLinf|"}) {
    cell(h);
  }
  txt << '\n';
  csv << "model,l1_train,l1_test,d_l1,l2_train,l2_test,d_l2,linf_train,linf_test,d_linf\n";
  for (const auto& r : rows) {
    const double vals[] = {r.l1_train,   r.l1_test, r.d_l1,      r.l2_train, r.l2_test,
                           r.d_l2,       r.linf_train, r.linf_test, r.d_linf};
    txt.width(static_cast<std::streamsize>(name_w));
    txt << std::left << r.model_name;
    csv << r.model_name;
    for (double v : vals) {
      cell(sci2(v));
      csv << ',' << sci2(v);
    }
    txt << '\n';
    csv << '\n';
  }
  return {txt.str(), csv.str()};
}

/// Reads back a table CSV written by render_table.
inline std::vector<MetricsRow> parse_table_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  std::getline(in, line);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    detail::require(f.size() == 10, "parse_table_csv: expected 10 columns");
    MetricsRow r;
    r.model_name = f[0];
    double* dst[] = {&r.l1_train, &r.l1_test, &r.d_l1,      &r.l2_train, &r.l2_test,
                     &r.d_l2,     &r.linf_train, &r.linf_test, &r.d_linf};
    for (std::size_t i = 0; i < 9; ++i) *dst[i] = std::stod(f[i + 1]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string curves_csv(const CurveSet& c) {
  std::ostringstream out;
  out << "x,y_true";
  for (const auto& [id, _] : c.series) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < c.x.size(); ++i) {
    out << full_precision(c.x(i)) << ',' << full_precision(c.y_true(i));
    for (const auto& [_, y] : c.series) out << ',' << full_precision(y(i));
    out << '\n';
  }
  return out.str();
}

inline CurveSet parse_curves_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), "curves csv: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string h;
    while (std::getline(ss, h, ',')) header.push_back(h);
  }
  detail::require(header.size() >= 2 && header[0] == "x" && header[1] == "y_true",
                  "curves csv: header must start with x,y_true");
  std::vector<std::vector<double>> cols(header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string v;
    std::size_t c = 0;
    while (std::getline(ss, v, ',')) {
      detail::require(c < cols.size(), "curves csv: too many columns");
      cols[c++].push_back(std::stod(v));
    }
    detail::require(c == cols.size(), "curves csv: too few columns");
  }
  auto vec = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  CurveSet out;
  out.x = vec(cols[0]);
  out.y_true = vec(cols[1]);
  for (std::size_t c = 2; c < cols.size(); ++c) out.series.emplace_back(header[c], vec(cols[c]));
  return out;
}

enum class FigureGroup { Trees, Linear };

/// The network is drawn in both figures as the reference extrapolator.
inline bool in_group(ModelKind k, FigureGroup g) {
  if (k == ModelKind::Dnn) return true;
  return g == FigureGroup::Trees ? plateaus(k) : info(k).family == ModelFamily::Linear;
}

/// Line chart of the true function and each model in the group over
/// [window_lo, window_hi]; the region x >= boundary is shaded.
inline std::string render_figure(const CurveSet& curves, FigureGroup group, double boundary,
                                 double window_lo, double window_hi) {
  detail::require(curves.x.size() >= 2, "render_figure: no curve data");
  detail::require(window_lo < window_hi, "render_figure: empty window");
  constexpr double W = 800, H = 500, ml = 70, mr = 200, mt = 40, mb = 50;
  const double pw = W - ml - mr, ph = H - mt - mb;

  std::vector<std::pair<std::string, const Eigen::VectorXd*>> shown;
  for (const auto& [id, y] : curves.series) {
    const auto k = parse_model(id);
    if (k && in_group(*k, group)) shown.emplace_back(id, &y);
  }
  std::vector<bool> inside(static_cast<std::size_t>(curves.x.size()));
  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  for (Eigen::Index i = 0; i < curves.x.size(); ++i) {
    const bool in = curves.x(i) >= window_lo && curves.x(i) <= window_hi;
    inside[static_cast<std::size_t>(i)] = in;
    if (!in) continue;
    ylo = std::min(ylo, curves.y_true(i));
    yhi = std::max(yhi, curves.y_true(i));
    for (const auto& s : shown) {
      ylo = std::min(ylo, (*s.second)(i));
      yhi = std::max(yhi, (*s.second)(i));
    }
  }
  if (!(ylo < yhi)) {
    ylo -= 1.0;
    yhi += 1.0;
  }
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  auto px = [&](double x) { return ml + (x - window_lo) / (window_hi - window_lo) * pw; };
  auto py = [&](double y) { return mt + (yhi - y) / (yhi - ylo) * ph; };
  auto num = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return std::string(b);
  };
  auto path = [&](const Eigen::VectorXd& y) {
    std::string d;
    bool first = true;
    for (Eigen::Index i = 0; i < curves.x.size(); ++i) {
      if (!inside[static_cast<std::size_t>(i)]) continue;
      d += (first ? "M" : " L") + num(px(curves.x(i))) + "," + num(py(y(i)));
      first = false;
    }
    return d;
  };

  static constexpr const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd",
                                            "#8c564b", "#17becf", "#bcbd22", "#7f7f7f"};
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  char title[160];
  std::snprintf(title, sizeof title, "%s models, x in [%.1f, %.1f]",
                group == FigureGroup::Trees ? "Ensemble and KNN" : "Linear", window_lo, window_hi);
  svg << "  <title>" << title << "</title>\n";
  svg << "  <rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  if (boundary < window_hi) {
    const double bx = px(std::max(boundary, window_lo));
    svg << "  <rect class=\"test-region\" x=\"" << num(bx) << "\" y=\"" << mt << "\" width=\""
        << num(ml + pw - bx) << "\" height=\"" << ph << "\" fill=\"#f8d0d0\"/>\n";
  }
  svg << "  <rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 6; ++t) {
    const double xv = window_lo + (window_hi - window_lo) * t / 6.0;
    char lab[16];
    std::snprintf(lab, sizeof lab, "%.1f", xv);
    svg << "  <text x=\"" << num(px(xv)) << "\" y=\"" << num(mt + ph + 20)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << lab << "</text>\n";
    const double yv = ylo + (yhi - ylo) * t / 6.0;
    std::snprintf(lab, sizeof lab, "%.2f", yv);
    svg << "  <text x=\"" << num(ml - 8) << "\" y=\"" << num(py(yv) + 4)
        << "\" font-size=\"12\" text-anchor=\"end\">" << lab << "</text>\n";
  }
  svg << "  <text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(H - 10)
      << "\" font-size=\"14\" text-anchor=\"middle\">x</text>\n";
  svg << "  <text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(mt - 15)
      << "\" font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";

  svg << "  <path class=\"truth\" d=\"" << path(curves.y_true)
      << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n";
  double ly = mt + 10;
  svg << "  <text x=\"" << num(ml + pw + 35) << "\" y=\"" << num(ly + 4)
      << "\" font-size=\"12\">f(x) = exp(x^2 + x)</text>\n";
  svg << "  <line x1=\"" << num(ml + pw + 8) << "\" y1=\"" << num(ly) << "\" x2=\""
      << num(ml + pw + 30) << "\" y2=\"" << num(ly)
      << "\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n";
  std::size_t ci = 0;
  for (const auto& [id, y] : shown) {
    const char* color = palette[ci++ % std::size(palette)];
    const auto k = parse_model(id);
    svg << "  <path class=\"model\" data-model=\"" << id << "\" d=\"" << path(*y)
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    ly += 20;
    svg << "  <line x1=\"" << num(ml + pw + 8) << "\" y1=\"" << num(ly) << "\" x2=\""
        << num(ml + pw + 30) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    svg << "  <text x=\"" << num(ml + pw + 35) << "\" y=\"" << num(ly + 4) << "\" font-size=\"12\">"
        << info(*k).display << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// ---------------------------------------------------------------------------
// results.json

inline nlohmann::json to_json(const ParamMap& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : p) std::visit([&](const auto& x) { j[k] = x; }, v);
  return j;
}

inline nlohmann::json to_json(const MetricsRow& r) {
  return {{"model", r.model_name}, {"l1_train", r.l1_train},     {"l1_test", r.l1_test},
          {"d_l1", r.d_l1},        {"l2_train", r.l2_train},     {"l2_test", r.l2_test},
          {"d_l2", r.d_l2},        {"linf_train", r.linf_train}, {"linf_test", r.linf_test},
          {"d_linf", r.d_linf}};
}

inline MetricsRow row_from_json(const nlohmann::json& j) {
  MetricsRow r;
  r.model_name = j.at("model").get<std::string>();
  r.l1_train = j.at("l1_train").get<double>();
  r.l1_test = j.at("l1_test").get<double>();
  r.d_l1 = j.at("d_l1").get<double>();
  r.l2_train = j.at("l2_train").get<double>();
  r.l2_test = j.at("l2_test").get<double>();
  r.d_l2 = j.at("d_l2").get<double>();
  r.linf_train = j.at("linf_train").get<double>();
  r.linf_test = j.at("linf_test").get<double>();
  r.d_linf = j.at("d_linf").get<double>();
  return r;
}

/// Config echo. The output directory and timings are left out so that reruns
/// with the same seed produce identical files.
inline nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json roster = nlohmann::json::array();
  nlohmann::json modes = nlohmann::json::object();
  for (auto k : c.roster) {
    roster.push_back(info(k).id);
    modes[std::string(info(k).id)] = to_string(c.mode_for(k));
  }
  return {{"function", c.function},
          {"n_points", c.split.n_points},
          {"lo", c.split.lo},
          {"hi", c.split.hi},
          {"boundary", c.split.boundary},
          {"sampling", c.split.mode == SamplingMode::Grid ? "grid" : "uniform"},
          {"models", roster},
          {"modes", modes},
          {"seed", c.seed},
          {"budget",
           {{"n_initial", c.budget.n_initial},
            {"cv_folds", c.budget.cv_folds},
            {"eta", c.budget.eta},
            {"hyperband_max_epochs", c.budget.hyperband_max_epochs}}},
          {"dnn",
           {{"batch_size", c.mlp.batch_size},
            {"max_epochs", c.mlp.max_epochs},
            {"patience", c.mlp.patience},
            {"val_fraction", c.mlp.val_fraction}}},
          {"window", {c.window_lo, c.window_hi}},
          {"plot_points", c.plot_points}};
}

inline nlohmann::json results_json(const RunReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json failures = nlohmann::json::object();
  for (const auto& m : r.models) {
    const std::string id(info(m.kind).id);
    if (m.ok) {
      auto row = to_json(m.row);
      row["id"] = id;
      rows.push_back(std::move(row));
      params[id] = to_json(m.params);
    } else {
      failures[id] = m.error;
    }
  }
  return {{"config", config_json(r.config)},
          {"rows", rows},
          {"params", params},
          {"failures", failures},
          {"curves", "curves.csv"}};
}

/// Saved results needed to re-render the table and figures.
struct SavedResults {
  std::vector<MetricsRow> rows;
  double boundary = 0.7;
  double window_lo = 0.4;
  double window_hi = 1.0;
  std::filesystem::path curves_path;
};

inline SavedResults load_results(const std::filesystem::path& results_file) {
  std::ifstream in(results_file);
  if (!in) throw std::runtime_error("cannot read " + results_file.string());
  const auto j = nlohmann::json::parse(in);
  SavedResults s;
  for (const auto& row : j.at("rows")) s.rows.push_back(row_from_json(row));
  const auto& c = j.at("config");
  s.boundary = c.at("boundary").get<double>();
  s.window_lo = c.at("window").at(0).get<double>();
  s.window_hi = c.at("window").at(1).get<double>();
  s.curves_path = results_file.parent_path() / j.at("curves").get<std::string>();
  return s;
}

inline void write_text(const std::filesystem::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_table_files(const std::vector<MetricsRow>& rows, const std::filesystem::path& dir) {
  const auto t = render_table(rows);
  write_text(dir / "table.txt", t.text);
  write_text(dir / "table.csv", t.csv);
}

inline void write_figure_files(const CurveSet& curves, double boundary, double lo, double hi,
                               const std::filesystem::path& dir) {
  write_text(dir / "figure_trees.svg", render_figure(curves, FigureGroup::Trees, boundary, lo, hi));
  write_text(dir / "figure_linear.svg", render_figure(curves, FigureGroup::Linear, boundary, lo, hi));
}

/// Writes results.json, table.txt, table.csv, curves.csv and both figures.
inline void write_outputs(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "results.json", results_json(r).dump(2) + "\n");
  write_text(dir / "curves.csv", curves_csv(r.curves));
  const auto rows = r.rows();
  if (!rows.empty()) write_table_files(rows, dir);
  write_figure_files(r.curves, r.config.split.boundary, r.config.window_lo, r.config.window_hi, dir);
}

}  // namespace extrap
