#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "extrap/harness.hpp"

namespace extrap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline void log_outcome(std::ostream& log, const ModelOutcome& m) {
  log << "  " << info(m.kind).id << ": ";
  if (!m.ok) {
    log << "FAILED: " << m.error << '\n';
    return;
  }
  log << "test Linf " << sci2(m.row.linf_test) << " (tune " << m.times.tune_s << "s, fit "
      << m.times.fit_s << "s)\n";
}

}  // namespace detail

/// Subcommands:
///   run    full study; writes results.json, table.{txt,csv}, curves.csv and figures
///   table  re-render table.{txt,csv} from <out>/results.json
///   plot   re-render the figures from <out>/results.json and its curves.csv
/// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Extrapolation benchmark: tree, neighbor, linear and MLP regressors on exp(x^2 + x)"};
  app.require_subcommand(1);

  std::string config_path, models, mode, out_dir;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run the full study");
  run->add_option("--config", config_path, "Flat key = value config file");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--models", models, "Comma-separated model ids, or 'all'");
  run->add_option("--mode", mode, "tuned | defaults");
  run->add_option("--out", out_dir, "Output directory");

  auto* table = app.add_subcommand("table", "Re-render the table from saved results");
  table->add_option("--out", out_dir, "Directory holding results.json")->required();

  auto* plot = app.add_subcommand("plot", "Re-render figures from saved results");
  plot->add_option("--out", out_dir, "Directory holding results.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  if (*run) {
    ExperimentConfig cfg;
    try {
      if (!config_path.empty()) apply_config_file(cfg, config_path);
      if (seed) cfg.seed = *seed;
      if (!models.empty()) cfg.roster = parse_roster(models);
      if (!mode.empty()) cfg.mode = parse_mode(mode);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      cfg.validate();
    } catch (const InvalidArgument& e) {
      err << "usage error: " << e.what() << '\n';
      return kExitUsage;
    }
    try {
      err << "running " << cfg.roster.size() << " model(s), seed " << cfg.seed << '\n';
      const RunReport report = run_experiment(cfg);
      for (const auto& m : report.models) detail::log_outcome(err, m);
      write_outputs(report, cfg.out_dir);
      if (!report.rows().empty()) out << render_table(report.rows()).text;
      if (!report.all_ok()) {
        err << "one or more models failed; see results.json\n";
        return kExitFailure;
      }
      return kExitOk;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitFailure;
    }
  }

  try {
    const std::filesystem::path dir(out_dir);
    const SavedResults saved = load_results(dir / "results.json");
    if (*table) {
      write_table_files(saved.rows, dir);
      out << render_table(saved.rows).text;
    } else {
      const CurveSet curves = parse_curves_csv(read_text(saved.curves_path));
      write_figure_files(curves, saved.boundary, saved.window_lo, saved.window_hi, dir);
      out << "wrote " << (dir / "figure_trees.svg").string() << " and "
          << (dir / "figure_linear.svg").string() << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace extrap
