#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../common/gen.hpp"
#include "dbsom/io.hpp"

using namespace dbsom;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "dbsom_unit_io";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string path_of(const std::string& name) {
  return (scratch() / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream acc;
  acc << in.rdbuf();
  return acc.str();
}

ErrorCode code_of(const std::function<void()>& fn, std::string* what = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (what) *what = e.what();
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("canonical JSON tables survive a round trip bit for bit") {
  Rng rng(601);
  DistributionalTable t = testgen::random_table(rng, 6, 3);
  t.labels = {"a", "b", "a", "c", "b", "a"};
  const std::string path = path_of("roundtrip.json");
  write_table(t, path);
  const DistributionalTable back = load_table(path);
  CHECK(back.objects == t.objects);
  CHECK(back.variables == t.variables);
  CHECK(back.labels == t.labels);
  REQUIRE(back.cells.size() == t.cells.size());
  for (std::size_t c = 0; c < t.cells.size(); ++c) {
    CHECK(back.cells[c].probs() == t.cells[c].probs());
    CHECK(back.cells[c].values() == t.cells[c].values());
  }

  // writing the reloaded table reproduces the file exactly
  const std::string again = path_of("roundtrip2.json");
  write_table(back, again);
  CHECK(read_file(again) == read_file(path));
}

TEST_CASE("JSON tables accept histogram cells and name bad ones") {
  const std::string path = path_of("hist.json");
  write_file(path, R"({
    "objects": ["a"],
    "variables": ["x"],
    "cells": [[{"breaks": [0, 1], "weights": [1]}]]
  })");
  const DistributionalTable t = load_table(path);
  REQUIRE(t.n_objects() == 1);
  CHECK(t.at(0, 0)(0.25) == doctest::Approx(0.25).epsilon(1e-15));

  const std::string bad = path_of("hist_bad.json");
  write_file(bad, R"({
    "objects": ["obj7"],
    "variables": ["speed"],
    "cells": [[{"breaks": [0, 1], "weights": [0.7]}]]
  })");
  std::string what;
  CHECK(code_of([&] { load_table(bad); }, &what) ==
        ErrorCode::WeightsNotNormalized);
  CHECK(what.find("obj7") != std::string::npos);
  CHECK(what.find("speed") != std::string::npos);

  const std::string garbage = path_of("garbage.json");
  write_file(garbage, "{not json");
  CHECK(code_of([&] { load_table(garbage); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { load_table(path_of("missing.json")); }) ==
        ErrorCode::IoError);
}

TEST_CASE("CSV tables parse cells, labels and quoting") {
  const std::string path = path_of("table.csv");
  write_file(path,
             "object,label,x,y\n"
             "\"a,1\",red,0;1|1,0;2;4|0.5;0.5\n"
             "b,blue,1;3|1,4;10|1\n");
  const DistributionalTable t = load_table(path);
  REQUIRE(t.n_objects() == 2);
  CHECK(t.objects[0] == "a,1");
  CHECK(t.labels == std::vector<std::string>{"red", "blue"});
  CHECK(t.variables == std::vector<std::string>{"x", "y"});
  CHECK(t.at(0, 0)(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.at(0, 1)(0.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t.at(1, 0)(0.5) == doctest::Approx(2.0).epsilon(1e-15));

  // same content without the label column
  const std::string bare = path_of("bare.csv");
  write_file(bare, "object,x\na,0;1|1\n");
  CHECK(load_table(bare).labels.empty());
}

TEST_CASE("CSV errors carry line, object and variable context") {
  const std::string path = path_of("broken.csv");
  write_file(path,
             "object,x,y\n"
             "good,0;1|1,0;1|1\n"
             "culprit,0;1|1,5;2|1\n");
  std::string what;
  CHECK(code_of([&] { load_table(path); }, &what) ==
        ErrorCode::NonMonotoneBreaks);
  CHECK(what.find("line 3") != std::string::npos);
  CHECK(what.find("culprit") != std::string::npos);
  CHECK(what.find("'y'") != std::string::npos);

  const std::string two_bars = path_of("twobars.csv");
  write_file(two_bars, "object,x\na,0;1|1|1\n");
  CHECK(code_of([&] { load_table(two_bars); }) == ErrorCode::ParseError);

  const std::string short_row = path_of("short.csv");
  write_file(short_row, "object,x,y\na,0;1|1\n");
  CHECK(code_of([&] { load_table(short_row); }) == ErrorCode::ParseError);

  const std::string no_object = path_of("noobj.csv");
  write_file(no_object, "thing,x\na,0;1|1\n");
  CHECK(code_of([&] { load_table(no_object); }) == ErrorCode::ParseError);
}

TEST_CASE("format detection follows the extension but can be forced") {
  const std::string csv_body = "object,x\na,0;1|1\n";
  const std::string odd = path_of("table.dat");
  write_file(odd, csv_body);
  CHECK(code_of([&] { load_table(odd); }) == ErrorCode::ParseError);  // json parse
  CHECK_NOTHROW(load_table(odd, TableFormat::Csv));
}

TEST_CASE("sample aggregation windows long series into histogram rows") {
  std::ostringstream body;
  body << "object,variable,value\n";
  for (int i = 1; i <= 125; ++i) body << "a,x," << i << "\n";
  const std::string path = path_of("samples.csv");
  write_file(path, body.str());

  const AggregateResult res = aggregate_samples(path, 125, 10);
  CHECK(res.dropped.empty());
  REQUIRE(res.table.n_objects() == 1);
  CHECK(res.table.objects[0] == "a#w0");
  CHECK(res.table.labels == std::vector<std::string>{"a"});
  CHECK(res.table.variables == std::vector<std::string>{"x"});
  const QuantileFunction& q = res.table.at(0, 0);
  REQUIRE(q.knots() == 11);
  CHECK(q(0.0) == 1.0);
  CHECK(q(1.0) == 125.0);
  CHECK(q(0.5) == doctest::Approx(63.0).epsilon(1e-12));
}

TEST_CASE("aggregation splits, drops tails and reports them") {
  std::ostringstream body;
  body << "object,variable,value\n";
  for (int i = 0; i < 250; ++i) body << "a,x," << (i % 17) << "\n";
  for (int i = 0; i < 130; ++i) body << "b,x," << (i % 11) << "\n";
  const std::string path = path_of("samples2.csv");
  write_file(path, body.str());

  const AggregateResult res = aggregate_samples(path, 125, 5);
  REQUIRE(res.table.n_objects() == 3);
  CHECK(res.table.objects == std::vector<std::string>{"a#w0", "a#w1", "b#w0"});
  CHECK(res.table.labels == std::vector<std::string>{"a", "a", "b"});
  REQUIRE(res.dropped.size() == 1);
  CHECK(res.dropped[0].first == "b");
  CHECK(res.dropped[0].second == 5);
}

TEST_CASE("aggregation rejects ragged and empty inputs") {
  const std::string ragged = path_of("ragged.csv");
  write_file(ragged,
             "object,variable,value\n"
             "a,x,1\na,x,2\na,y,1\n");
  std::string what;
  CHECK(code_of([&] { aggregate_samples(ragged, 2, 2); }, &what) ==
        ErrorCode::RaggedSeries);
  CHECK(what.find('a') != std::string::npos);

  const std::string shallow = path_of("shallow.csv");
  write_file(shallow, "object,variable,value\na,x,1\na,x,2\n");
  CHECK(code_of([&] { aggregate_samples(shallow, 50, 2); }) ==
        ErrorCode::EmptySample);
}

TEST_CASE("the full pipeline writes the four artifacts deterministically") {
  Rng rng(602);
  const double centers[] = {-6.0, 6.0};
  DistributionalTable t = testgen::clustered_table(rng, 8, centers, 2);
  const std::string input = path_of("run_input.json");
  write_table(t, input);

  RunConfig config;
  config.algorithm = Algorithm::Adbsom;
  config.scheme = Scheme::ClusterComponent;
  config.rows = 2;
  config.cols = 2;
  config.n_iter = 5;
  config.restarts = 3;
  config.seed = 17;
  config.input = input;
  config.output_dir = (scratch() / "run1").string();
  const RunResult first = run(config);
  CHECK(first.map.assignment.size() == 16);
  CHECK(first.report.ari.has_value());

  for (const char* name :
       {"map.json", "prototypes.json", "weights.json", "report.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(fs::path(config.output_dir) / name));
  }

  RunConfig rerun = config;
  rerun.output_dir = (scratch() / "run2").string();
  run(rerun);
  for (const char* name :
       {"map.json", "prototypes.json", "weights.json", "report.json"}) {
    CAPTURE(name);
    CHECK(read_file((fs::path(config.output_dir) / name).string()) ==
          read_file((fs::path(rerun.output_dir) / name).string()));
  }

  const nlohmann::json map = nlohmann::json::parse(
      read_file((fs::path(config.output_dir) / "map.json").string()));
  CHECK(map["algorithm"] == "adbsom");
  CHECK(map["scheme"] == "cluster-component");
  CHECK(map["rows"] == 2);
  CHECK(map["cols"] == 2);
  CHECK(map["seed"] == 17);
  CHECK(map["assignment"].size() == 16);
  CHECK(map["objects"].size() == 16);
  CHECK(map["criterion_history"].size() >= 6);
  CHECK(map["counts"].size() == 4);
  CHECK(map["positions"].size() == 4);

  const nlohmann::json weights = nlohmann::json::parse(
      read_file((fs::path(config.output_dir) / "weights.json").string()));
  CHECK(weights["scheme"] == "cluster-component");
  CHECK(weights["per_cluster"] == true);
  CHECK(weights["per_component"] == true);
  REQUIRE(weights.contains("mean"));
  REQUIRE(weights.contains("dispersion"));
  CHECK(weights["mean"].size() == 4);
  CHECK(weights["mean"][0].size() == 2);

  const nlohmann::json report = nlohmann::json::parse(
      read_file((fs::path(config.output_dir) / "report.json").string()));
  CHECK(report.contains("topographic_error"));
  CHECK(report.contains("silhouette_topo"));
  CHECK(report.contains("ari"));  // input table carried labels
}

TEST_CASE("plain maps ship unit weights") {
  Rng rng(603);
  DistributionalTable t = testgen::random_table(rng, 10, 2);
  const std::string input = path_of("plain_input.json");
  write_table(t, input);

  RunConfig config;
  config.rows = 2;
  config.cols = 2;
  config.n_iter = 4;
  config.restarts = 2;
  config.input = input;
  config.output_dir = (scratch() / "plain").string();
  const RunResult res = run(config);
  CHECK_FALSE(res.report.ari.has_value());

  const nlohmann::json weights = nlohmann::json::parse(
      read_file((fs::path(config.output_dir) / "weights.json").string()));
  CHECK(weights["scheme"] == "none");
  REQUIRE(weights.contains("values"));
  for (const auto& row : weights["values"])
    for (const auto& v : row) CHECK(v == 1.0);

  const nlohmann::json report = nlohmann::json::parse(
      read_file((fs::path(config.output_dir) / "report.json").string()));
  CHECK_FALSE(report.contains("ari"));
}

TEST_CASE("run validates its configuration up front") {
  RunConfig config;
  CHECK(code_of([&] { run(config); }) == ErrorCode::InvariantViolation);

  Rng rng(604);
  DistributionalTable t = testgen::random_table(rng, 6, 2);
  const std::string input = path_of("cfg_input.json");
  write_table(t, input);

  RunConfig mismatch;
  mismatch.input = input;
  mismatch.output_dir = (scratch() / "cfg").string();
  mismatch.scheme = Scheme::GlobalVariable;  // scheme without adbsom
  mismatch.rows = 2;
  mismatch.cols = 2;
  CHECK(code_of([&] { run(mismatch); }) == ErrorCode::SchemeMismatch);

  RunConfig half;
  half.input = input;
  half.output_dir = (scratch() / "cfg").string();
  half.rows = 2;  // cols missing
  CHECK(code_of([&] { run(half); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("re-scoring against labels merges into the report") {
  Rng rng(605);
  DistributionalTable t = testgen::random_table(rng, 12, 2);
  t.labels.clear();
  const std::string input = path_of("eval_input.json");
  write_table(t, input);

  RunConfig config;
  config.rows = 2;
  config.cols = 2;
  config.n_iter = 4;
  config.restarts = 2;
  config.seed = 9;
  config.input = input;
  config.output_dir = (scratch() / "eval").string();
  const RunResult res = run(config);

  // labels identical to the trained partition: perfect external scores
  std::ostringstream labels;
  labels << "object,label\n";
  for (std::size_t i = 0; i < t.objects.size(); ++i)
    labels << t.objects[i] << ",n"
           << res.map.assignment[i] << "\n";
  const std::string labels_path = path_of("labels.csv");
  write_file(labels_path, labels.str());

  const IndexReport scored = evaluate(config.output_dir, labels_path);
  REQUIRE(scored.ari.has_value());
  CHECK(*scored.ari == 1.0);
  CHECK(*scored.purity == 1.0);

  const nlohmann::json merged = nlohmann::json::parse(
      read_file((fs::path(config.output_dir) / "report.json").string()));
  CHECK(merged.contains("silhouette"));  // internals kept
  CHECK(merged["ari"] == 1.0);
  CHECK(merged["purity"] == 1.0);

  // permuting label names must not change the adjusted agreement
  std::ostringstream renamed;
  renamed << "object,label\n";
  for (std::size_t i = 0; i < t.objects.size(); ++i)
    renamed << t.objects[i] << ",z"
            << (9 - res.map.assignment[i]) << "\n";
  const std::string renamed_path = path_of("labels_renamed.csv");
  write_file(renamed_path, renamed.str());
  const IndexReport again = evaluate(config.output_dir, renamed_path);
  CHECK(*again.ari == 1.0);

  // unknown and missing objects are rejected
  std::string extra = labels.str() + "ghost,n0\n";
  const std::string extra_path = path_of("labels_extra.csv");
  write_file(extra_path, extra);
  CHECK(code_of([&] { evaluate(config.output_dir, extra_path); }) ==
        ErrorCode::UnknownObjectId);

  std::ostringstream missing;
  missing << "object,label\n" << t.objects[0] << ",n0\n";
  const std::string missing_path = path_of("labels_missing.csv");
  write_file(missing_path, missing.str());
  CHECK(code_of([&] { evaluate(config.output_dir, missing_path); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("svg export renders counts and weight maps deterministically") {
  Rng rng(606);
  const double centers[] = {-5.0, 5.0};
  DistributionalTable t = testgen::clustered_table(rng, 6, centers, 2);
  const std::string input = path_of("svg_input.json");
  write_table(t, input);

  RunConfig config;
  config.algorithm = Algorithm::Adbsom;
  config.scheme = Scheme::GlobalVariable;
  config.rows = 2;
  config.cols = 2;
  config.n_iter = 4;
  config.restarts = 2;
  config.seed = 5;
  config.input = input;
  config.output_dir = (scratch() / "svg").string();
  run(config);

  const std::vector<std::string> paths = export_svgs(config.output_dir);
  REQUIRE(paths.size() >= 3);  // counts + one map per variable
  bool saw_counts = false;
  for (const std::string& p : paths) {
    CHECK(fs::exists(p));
    const std::string body = read_file(p);
    CHECK(body.rfind("<svg", 0) == 0);
    if (fs::path(p).filename() == "counts.svg") saw_counts = true;
  }
  CHECK(saw_counts);

  const std::string before = read_file(paths[1]);
  export_svgs(config.output_dir);
  CHECK(read_file(paths[1]) == before);
}

TEST_CASE("library errors map onto the documented exit codes") {
  CHECK(exit_code(Error(ErrorCode::ParseError, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::WeightsNotNormalized, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::SchemeMismatch, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::ToroidalParity, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::UnknownObjectId, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::IoError, "x")) == 3);
  CHECK(exit_code(Error(ErrorCode::IoError, "x")) == 3);
  CHECK(exit_code(Error(ErrorCode::IndexOutOfRange, "x")) == 3);
}
