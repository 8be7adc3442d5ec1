#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dbsom/som.hpp"
#include "dbsom/validity.hpp"

namespace dbsom {

enum class TableFormat { Auto, Json, Csv };

// Read a distributional table. Auto picks Csv for a .csv extension and Json
// otherwise. JSON is the canonical format: objects, variables, optional
// labels, and a row-major cells grid where each cell is either
// {"probs": [...], "values": [...]} (quantile knots) or
// {"breaks": [...], "weights": [...]} (histogram). CSV rows are
// object[,label],cell,... with cells encoded b0;b1;...;bk|w1;...;wk.
// Errors carry the offending object/variable (and line for CSV).
DistributionalTable load_table(const std::string& path,
                               TableFormat format = TableFormat::Auto);

// Write the canonical JSON form. Every cell is emitted as quantile knots
// with 17 significant digits, so load_table(write_table(t)) reproduces the
// table bit for bit. The write is atomic (temp file then rename).
void write_table(const DistributionalTable& table, const std::string& path);

struct AggregateResult {
  DistributionalTable table;
  // (object id, trailing samples dropped) for objects whose series length
  // is not a multiple of the window.
  std::vector<std::pair<std::string, Index>> dropped;
};

// Turn a long-format CSV of raw measurements (columns: object, variable,
// value) into a distributional table: each object's series is cut into
// consecutive windows of `window` samples and each window becomes one table
// row ("<object>#w<k>") of equi-depth histograms with `bins` bins per
// variable. The source object id becomes the row label. Within an object
// every variable must have the same number of samples (RaggedSeries).
AggregateResult aggregate_samples(const std::string& path, Index window,
                                  int bins);

struct RunConfig {
  Algorithm algorithm = Algorithm::Dbsom;
  Scheme scheme = Scheme::None;  // required for Adbsom, None for Dbsom
  bool standardize = false;
  Index rows = 0;  // 0 for both -> suggest_map_size(N)
  Index cols = 0;
  Topology topology = Topology::Planar;
  int n_iter = 50;
  double t_max = 0.0;  // <= 0 -> default_radii
  double t_min = 0.0;
  int restarts = 20;
  std::uint64_t seed = 0;
  std::string input;
  std::string output_dir;
  bool svg = false;
};

struct RunResult {
  TrainedMap map;
  IndexReport report;
};

// Full pipeline: load, (standardize,) train with restarts, score, and write
// map.json, prototypes.json, weights.json and report.json into output_dir
// (plus the SVG maps when svg is set). All writes are atomic; identical
// config and seed produce byte-identical artifacts.
RunResult run(const RunConfig& config);

// Recompute the external indexes of a trained map against a labels CSV
// (columns: object, label) and merge them into output_dir/report.json.
// Every map object needs a label; label rows for unknown ids raise
// UnknownObjectId.
IndexReport evaluate(const std::string& artifacts_dir,
                     const std::string& labels_path);

// Render counts.svg and the per-variable relevance-weight maps from the
// artifacts in the directory. Returns the written paths.
std::vector<std::string> export_svgs(const std::string& artifacts_dir);

// CLI exit code for a library error: 2 for data or configuration content
// problems, 3 for runtime failures.
int exit_code(const Error& error);

}  // namespace dbsom
