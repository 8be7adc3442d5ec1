#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dbsom/io.hpp"

namespace {

std::string num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

dbsom::TableFormat format_from(const std::string& name) {
  if (name == "json") return dbsom::TableFormat::Json;
  if (name == "csv") return dbsom::TableFormat::Csv;
  return dbsom::TableFormat::Auto;
}

void print_report(const dbsom::IndexReport& report) {
  std::cout << "topographic error        " << num(report.topographic_error)
            << "\n";
  std::cout << "silhouette               " << num(report.silhouette) << "\n";
  std::cout << "silhouette (topo)        " << num(report.silhouette_topo);
  if (report.topo_skipped > 0)
    std::cout << "  [" << report.topo_skipped << " objects skipped]";
  std::cout << "\n";
  std::cout << "simplified silhouette    " << num(report.silhouette_simplified)
            << "\n";
  std::cout << "simplified silh. (topo)  "
            << num(report.silhouette_simplified_topo);
  if (report.simplified_topo_skipped > 0)
    std::cout << "  [" << report.simplified_topo_skipped
              << " objects skipped]";
  std::cout << "\n";
  if (report.ari) {
    std::cout << "adjusted rand index      " << num(*report.ari) << "\n";
    std::cout << "normalized mutual info   " << num(*report.nmi);
    if (report.degenerate_entropy) std::cout << "  [degenerate partitions]";
    std::cout << "\n";
    std::cout << "purity                   " << num(*report.purity) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batch self-organizing maps for distributional-valued data"};
  app.require_subcommand(1);

  // ingest
  std::string in_input, in_output, in_format = "auto";
  dbsom::Index in_window = 0;
  int in_bins = 10;
  CLI::App* ingest = app.add_subcommand(
      "ingest", "convert a table to canonical JSON, or aggregate raw samples");
  ingest->add_option("--input", in_input, "table (json/csv) or long-format sample csv")
      ->required();
  ingest->add_option("--output", in_output, "canonical table JSON to write")
      ->required();
  ingest->add_option("--format", in_format, "input format (default: by extension)")
      ->check(CLI::IsMember({"auto", "json", "csv"}));
  ingest->add_option("--window", in_window,
                     "aggregate mode: samples per window (omit to convert)");
  ingest->add_option("--bins", in_bins,
                     "aggregate mode: equi-depth bins per window (default 10)");

  // train
  dbsom::RunConfig cfg;
  std::string tr_algorithm = "dbsom";
  std::string tr_scheme;
  std::string tr_topology = "planar";
  std::string tr_config;
  CLI::App* train =
      app.add_subcommand("train", "train a map and write its artifacts");
  CLI::Option* o_input =
      train->add_option("--input", cfg.input, "distributional table (json/csv)");
  CLI::Option* o_output =
      train->add_option("--output", cfg.output_dir, "artifact directory");
  CLI::Option* o_algorithm =
      train->add_option("--algorithm", tr_algorithm, "dbsom|adbsom")
          ->check(CLI::IsMember({"dbsom", "adbsom"}));
  CLI::Option* o_scheme =
      train
          ->add_option("--scheme", tr_scheme,
                       "adaptive weighting scheme (adbsom only)")
          ->check(CLI::IsMember({"p1", "p2", "p3", "p4", "global-variable",
                                 "global-component", "cluster-variable",
                                 "cluster-component"}));
  CLI::Option* o_standardize = train->add_flag(
      "--standardize", cfg.standardize, "divide each variable by its dispersion");
  CLI::Option* o_rows =
      train->add_option("--rows", cfg.rows, "map rows (0: pick from data size)");
  CLI::Option* o_cols =
      train->add_option("--cols", cfg.cols, "map cols (0: pick from data size)");
  CLI::Option* o_topology =
      train->add_option("--topology", tr_topology, "planar|toroidal")
          ->check(CLI::IsMember({"planar", "toroidal"}));
  CLI::Option* o_n_iter =
      train->add_option("--iterations", cfg.n_iter, "scheduled epochs (default 50)");
  CLI::Option* o_t_max =
      train->add_option("--t-max", cfg.t_max, "initial radius (0: heuristic)");
  CLI::Option* o_t_min =
      train->add_option("--t-min", cfg.t_min, "final radius (0: heuristic)");
  CLI::Option* o_restarts =
      train->add_option("--restarts", cfg.restarts, "random restarts (default 20)");
  CLI::Option* o_seed = train->add_option("--seed", cfg.seed, "master RNG seed");
  CLI::Option* o_svg =
      train->add_flag("--svg", cfg.svg, "also render the SVG maps");
  train->add_option("--config", tr_config,
                    "JSON config; explicit flags take precedence");

  // evaluate
  std::string ev_dir, ev_labels;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score a trained map against a labels file");
  evaluate->add_option("--map", ev_dir, "artifact directory of a trained map")
      ->required();
  evaluate->add_option("--labels", ev_labels, "csv with object,label columns")
      ->required();

  // export-svg
  std::string ex_dir;
  CLI::App* export_svg = app.add_subcommand(
      "export-svg", "render count and weight maps from artifacts");
  export_svg->add_option("--map", ex_dir, "artifact directory of a trained map")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*ingest) {
      if (in_window > 0) {
        const dbsom::AggregateResult result =
            dbsom::aggregate_samples(in_input, in_window, in_bins);
        dbsom::write_table(result.table, in_output);
        for (const auto& [id, n] : result.dropped)
          std::cout << "dropped " << n << " trailing samples of object '" << id
                    << "'\n";
        std::cout << "wrote " << result.table.n_objects() << " windows x "
                  << result.table.n_variables() << " variables to " << in_output
                  << "\n";
      } else {
        const dbsom::DistributionalTable table =
            dbsom::load_table(in_input, format_from(in_format));
        dbsom::write_table(table, in_output);
        std::cout << "wrote " << table.n_objects() << " objects x "
                  << table.n_variables() << " variables to " << in_output
                  << "\n";
      }
      return 0;
    }

    if (*train) {
      if (!tr_config.empty()) {
        const nlohmann::json j = [&] {
          std::ifstream in(tr_config);
          if (!in)
            dbsom::throw_error(dbsom::ErrorCode::IoError,
                               "cannot open " + tr_config);
          try {
            return nlohmann::json::parse(in);
          } catch (const nlohmann::json::parse_error& e) {
            dbsom::throw_error(dbsom::ErrorCode::ParseError,
                               tr_config + ": " + e.what());
          }
        }();
        const auto take = [&](const char* key, const CLI::Option* opt,
                              auto& target) {
          using T = std::decay_t<decltype(target)>;
          if (opt->count() == 0 && j.contains(key)) target = j.at(key).get<T>();
        };
        take("algorithm", o_algorithm, tr_algorithm);
        take("scheme", o_scheme, tr_scheme);
        take("standardize", o_standardize, cfg.standardize);
        take("rows", o_rows, cfg.rows);
        take("cols", o_cols, cfg.cols);
        take("topology", o_topology, tr_topology);
        take("n_iter", o_n_iter, cfg.n_iter);
        take("t_max", o_t_max, cfg.t_max);
        take("t_min", o_t_min, cfg.t_min);
        take("restarts", o_restarts, cfg.restarts);
        take("seed", o_seed, cfg.seed);
        take("input", o_input, cfg.input);
        take("output", o_output, cfg.output_dir);
        take("svg", o_svg, cfg.svg);
      }
      cfg.algorithm = dbsom::algorithm_from_name(tr_algorithm);
      cfg.scheme = tr_scheme.empty() ? dbsom::Scheme::None
                                     : dbsom::scheme_from_name(tr_scheme);
      cfg.topology = dbsom::topology_from_name(tr_topology);

      const dbsom::RunResult result = dbsom::run(cfg);
      std::cout << "trained " << result.map.grid.rows() << "x"
                << result.map.grid.cols() << " "
                << dbsom::topology_name(result.map.grid.topology()) << " map ("
                << dbsom::algorithm_name(cfg.algorithm);
      if (cfg.scheme != dbsom::Scheme::None)
        std::cout << ", " << dbsom::scheme_name(cfg.scheme);
      std::cout << ")\n";
      std::cout << "criterion " << num(result.map.final_criterion())
                << " from restart " << result.map.restart_index << " of "
                << cfg.restarts
                << (result.map.converged ? " (converged)" : " (cycle cap hit)")
                << "\n";
      print_report(result.report);
      std::cout << "artifacts in " << cfg.output_dir << "\n";
      return 0;
    }

    if (*evaluate) {
      const dbsom::IndexReport report = dbsom::evaluate(ev_dir, ev_labels);
      print_report(report);
      return 0;
    }

    if (*export_svg) {
      for (const std::string& path : dbsom::export_svgs(ex_dir))
        std::cout << "wrote " << path << "\n";
      return 0;
    }
  } catch (const dbsom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dbsom::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
