#include "dbsom/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "dbsom/svg.hpp"

namespace dbsom {

namespace fs = std::filesystem;
using jsonv = nlohmann::ordered_json;

namespace {

// ---- deterministic JSON output ------------------------------------------

// 17 significant digits round-trip every finite double exactly; negative
// zero is canonicalized so equal values always serialize identically.
std::string format_double(double x) {
  if (!std::isfinite(x))
    throw_error(ErrorCode::NonFiniteInput, "cannot serialize non-finite number");
  if (x == 0.0) x = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void dump_json(const jsonv& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string pad2(static_cast<std::size_t>(indent) + 2, ' ');
  switch (j.type()) {
    case jsonv::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad2;
        append_escaped(out, it.key());
        out += ": ";
        dump_json(it.value(), out, indent + 2);
      }
      out += "\n" + pad + "}";
      return;
    }
    case jsonv::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalars = true;
      for (const auto& el : j)
        if (el.is_structured()) scalars = false;
      if (scalars) {
        out += "[";
        bool first = true;
        for (const auto& el : j) {
          if (!first) out += ", ";
          first = false;
          dump_json(el, out, indent);
        }
        out += "]";
      } else {
        out += "[\n";
        bool first = true;
        for (const auto& el : j) {
          if (!first) out += ",\n";
          first = false;
          out += pad2;
          dump_json(el, out, indent + 2);
        }
        out += "\n" + pad + "]";
      }
      return;
    }
    case jsonv::value_t::string:
      append_escaped(out, j.get_ref<const std::string&>());
      return;
    case jsonv::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case jsonv::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      return;
    case jsonv::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      return;
    case jsonv::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += "null";
      return;
  }
}

void write_text_atomic(const std::string& path, const std::string& body) {
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec)
      throw_error(ErrorCode::IoError,
                  "cannot create directory " + target.parent_path().string());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_error(ErrorCode::IoError, "cannot open " + tmp.string());
    out << body;
    out.flush();
    if (!out) throw_error(ErrorCode::IoError, "write failed on " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) throw_error(ErrorCode::IoError, "cannot rename to " + path);
}

void write_json_file(const jsonv& j, const std::string& path) {
  std::string body;
  dump_json(j, body, 0);
  body += "\n";
  write_text_atomic(path, body);
}

// ---- parsing helpers ------------------------------------------------------

jsonv parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorCode::IoError, "cannot open " + path);
  try {
    return jsonv::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw_error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

const jsonv& need(const jsonv& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw_error(ErrorCode::ParseError,
                where + ": missing field '" + std::string(key) + "'");
  return j.at(key);
}

std::vector<std::string> string_list(const jsonv& j, const std::string& where) {
  if (!j.is_array())
    throw_error(ErrorCode::ParseError, where + " must be an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& el : j) {
    if (!el.is_string())
      throw_error(ErrorCode::ParseError, where + " must be an array of strings");
    out.push_back(el.get<std::string>());
  }
  return out;
}

Eigen::VectorXd number_list(const jsonv& j, const std::string& where) {
  if (!j.is_array())
    throw_error(ErrorCode::ParseError, where + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Index>(j.size()));
  Index at = 0;
  for (const auto& el : j) {
    if (!el.is_number())
      throw_error(ErrorCode::ParseError, where + " must be an array of numbers");
    out[at++] = el.get<double>();
  }
  return out;
}

std::vector<Index> index_list(const jsonv& j, const std::string& where) {
  if (!j.is_array())
    throw_error(ErrorCode::ParseError, where + " must be an array of integers");
  std::vector<Index> out;
  out.reserve(j.size());
  for (const auto& el : j) {
    if (!el.is_number_integer() && !el.is_number_unsigned())
      throw_error(ErrorCode::ParseError, where + " must be an array of integers");
    out.push_back(el.get<Index>());
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view text, const std::string& where) {
  const std::string_view token = trim(text);
  double out = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), out);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      !std::isfinite(out))
    throw_error(ErrorCode::ParseError,
                where + ": not a finite number: '" + std::string(text) + "'");
  return out;
}

// RFC-style CSV fields: comma separated, double quotes optional, "" escapes
// a quote inside a quoted field.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Reads logical lines: strips \r and a UTF-8 BOM on the first line, skips
// blank lines, counts physical line numbers.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw_error(ErrorCode::IoError, "cannot open " + path);
  }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line_no_ == 1 && line.rfind("\xef\xbb\xbf", 0) == 0) line.erase(0, 3);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      fields = split_csv(line);
      return true;
    }
    return false;
  }

  int line() const { return line_no_; }
  std::string at() const { return path_ + ":" + std::to_string(line_no_); }

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
};

Eigen::VectorXd parse_semis(std::string_view text, const std::string& where) {
  std::vector<double> vals;
  std::size_t start = 0;
  const std::string s(text);
  while (true) {
    const std::size_t semi = s.find(';', start);
    const std::string_view token(s.data() + start,
                                 (semi == std::string::npos ? s.size() : semi) -
                                     start);
    vals.push_back(parse_double(token, where));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                           static_cast<Index>(vals.size()));
}

QuantileFunction parse_csv_cell(const std::string& text,
                                const std::string& where) {
  const std::size_t bar = text.find('|');
  if (bar == std::string::npos || text.find('|', bar + 1) != std::string::npos)
    throw_error(ErrorCode::ParseError,
                where + ": cell must be breaks|weights with a single '|'");
  HistogramSpec hist;
  hist.breaks = parse_semis(std::string_view(text).substr(0, bar), where);
  hist.weights = parse_semis(std::string_view(text).substr(bar + 1), where);
  return qf_from_histogram(hist);
}

DistributionalTable load_table_json(const std::string& path) {
  const jsonv j = parse_json_file(path);
  DistributionalTable table;
  table.objects = string_list(need(j, "objects", path), path + ": objects");
  table.variables =
      string_list(need(j, "variables", path), path + ": variables");
  if (j.contains("labels"))
    table.labels = string_list(j.at("labels"), path + ": labels");
  const jsonv& rows = need(j, "cells", path);
  if (!rows.is_array() || rows.size() != table.objects.size())
    throw_error(ErrorCode::ParseError,
                path + ": cells must have one row per object");
  table.cells.reserve(table.objects.size() * table.variables.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const jsonv& row = rows[i];
    if (!row.is_array() || row.size() != table.variables.size())
      throw_error(ErrorCode::ParseError,
                  path + ": cells[" + std::to_string(i) +
                      "] must have one entry per variable");
    for (std::size_t v = 0; v < row.size(); ++v) {
      const jsonv& cell = row[v];
      const std::string where = path + ": cells[" + std::to_string(i) + "][" +
                                std::to_string(v) + "]";
      try {
        if (cell.is_object() && cell.contains("probs")) {
          table.cells.emplace_back(
              number_list(need(cell, "probs", where), where + ".probs"),
              number_list(need(cell, "values", where), where + ".values"));
        } else if (cell.is_object() && cell.contains("breaks")) {
          HistogramSpec hist;
          hist.breaks =
              number_list(need(cell, "breaks", where), where + ".breaks");
          hist.weights =
              number_list(need(cell, "weights", where), where + ".weights");
          table.cells.push_back(qf_from_histogram(hist));
        } else {
          throw_error(ErrorCode::ParseError,
                      "cell needs probs/values or breaks/weights");
        }
      } catch (const Error& e) {
        throw Error(e.code(), e.message() + " (object '" + table.objects[i] +
                                  "', variable '" + table.variables[v] + "')");
      }
    }
  }
  table.validate();
  return table;
}

DistributionalTable load_table_csv(const std::string& path) {
  CsvReader reader(path);
  std::vector<std::string> header;
  if (!reader.next(header))
    throw_error(ErrorCode::ParseError, path + ": empty file");
  if (header.empty() || header[0] != "object")
    throw_error(ErrorCode::ParseError,
                reader.at() + ": first column must be 'object'");
  const bool has_label = header.size() >= 2 && header[1] == "label";
  const std::size_t first_var = has_label ? 2 : 1;
  if (header.size() <= first_var)
    throw_error(ErrorCode::ParseError, reader.at() + ": no variable columns");

  DistributionalTable table;
  table.variables.assign(header.begin() + static_cast<std::ptrdiff_t>(first_var),
                         header.end());
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != header.size())
      throw_error(ErrorCode::ParseError,
                  reader.at() + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(row.size()));
    table.objects.push_back(row[0]);
    if (has_label) table.labels.push_back(row[1]);
    for (std::size_t v = 0; v < table.variables.size(); ++v) {
      try {
        table.cells.push_back(parse_csv_cell(row[first_var + v], reader.at()));
      } catch (const Error& e) {
        throw Error(e.code(), e.message() + " (line " +
                                  std::to_string(reader.line()) + ", object '" +
                                  row[0] + "', variable '" +
                                  table.variables[v] + "')");
      }
    }
  }
  table.validate();
  return table;
}

jsonv vector_json(const Eigen::VectorXd& v) {
  jsonv out = jsonv::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

jsonv matrix_json(const Eigen::MatrixXd& m) {
  jsonv out = jsonv::array();
  for (Index r = 0; r < m.rows(); ++r)
    out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

Eigen::MatrixXd json_matrix(const jsonv& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw_error(ErrorCode::ParseError, where + " must be a non-empty matrix");
  const Eigen::VectorXd first = number_list(j[0], where + "[0]");
  Eigen::MatrixXd out(static_cast<Index>(j.size()), first.size());
  out.row(0) = first.transpose();
  for (std::size_t r = 1; r < j.size(); ++r) {
    const Eigen::VectorXd row =
        number_list(j[r], where + "[" + std::to_string(r) + "]");
    if (row.size() != out.cols())
      throw_error(ErrorCode::ParseError, where + " rows have unequal lengths");
    out.row(static_cast<Index>(r)) = row.transpose();
  }
  return out;
}

jsonv cell_json(const QuantileFunction& q) {
  jsonv cell;
  cell["probs"] = vector_json(q.probs());
  cell["values"] = vector_json(q.values());
  return cell;
}

// ---- artifact construction -------------------------------------------------

jsonv map_json(const TrainedMap& map, const RunConfig& config,
               const std::vector<std::string>& objects) {
  jsonv j;
  j["algorithm"] = algorithm_name(map.config.algorithm);
  j["scheme"] = scheme_name(map.weights.scheme);
  j["topology"] = topology_name(map.grid.topology());
  j["rows"] = static_cast<std::int64_t>(map.grid.rows());
  j["cols"] = static_cast<std::int64_t>(map.grid.cols());
  j["standardize"] = map.config.standardize;
  j["n_iter"] = static_cast<std::int64_t>(map.config.n_iter);
  j["t_max"] = map.radii.t_max;
  j["t_min"] = map.radii.t_min;
  j["restarts"] = static_cast<std::int64_t>(config.restarts);
  j["seed"] = map.config.seed;
  j["seed_used"] = map.seed_used;
  j["restart_index"] = static_cast<std::int64_t>(map.restart_index);
  j["converged"] = map.converged;
  j["final_loop_start"] = static_cast<std::int64_t>(map.final_loop_start);
  j["degenerate_dispersion"] = map.degenerate_dispersion;
  j["final_criterion"] = map.final_criterion();
  jsonv positions = jsonv::array();
  for (Index m = 0; m < map.grid.size(); ++m) {
    const Eigen::Vector2d c = map.grid.position(m);
    positions.push_back(jsonv::array({c.x(), c.y()}));
  }
  j["positions"] = positions;
  jsonv counts = jsonv::array();
  for (Index n : map.neuron_counts())
    counts.push_back(static_cast<std::int64_t>(n));
  j["counts"] = counts;
  j["objects"] = objects;
  jsonv assignment = jsonv::array();
  for (Index m : map.assignment)
    assignment.push_back(static_cast<std::int64_t>(m));
  j["assignment"] = assignment;
  jsonv history = jsonv::array();
  for (double c : map.criterion_history) history.push_back(c);
  j["criterion_history"] = history;
  return j;
}

jsonv prototypes_json(const Prototypes& prototypes,
                      const std::vector<std::string>& variables) {
  jsonv j;
  j["neurons"] = static_cast<std::int64_t>(prototypes.neurons);
  j["variables"] = variables;
  jsonv rows = jsonv::array();
  for (Index m = 0; m < prototypes.neurons; ++m) {
    jsonv row = jsonv::array();
    for (Index v = 0; v < prototypes.variables; ++v)
      row.push_back(cell_json(prototypes.at(m, v)));
    rows.push_back(row);
  }
  j["cells"] = rows;
  return j;
}

jsonv weights_json(const WeightMatrix& weights,
                   const std::vector<std::string>& variables) {
  jsonv j;
  j["scheme"] = scheme_name(weights.scheme);
  j["variables"] = variables;
  j["per_cluster"] = scheme_is_cluster(weights.scheme);
  j["per_component"] = scheme_is_component(weights.scheme);
  const Index p = weights.n_variables();
  if (scheme_is_component(weights.scheme)) {
    j["mean"] = matrix_json(weights.values.leftCols(p));
    j["dispersion"] = matrix_json(weights.values.rightCols(p));
  } else {
    j["values"] = matrix_json(weights.values);
  }
  return j;
}

jsonv report_json(const IndexReport& report) {
  jsonv j;
  j["topographic_error"] = report.topographic_error;
  j["silhouette"] = report.silhouette;
  j["silhouette_topo"] = report.silhouette_topo;
  j["topo_skipped"] = static_cast<std::int64_t>(report.topo_skipped);
  j["silhouette_simplified"] = report.silhouette_simplified;
  j["silhouette_simplified_topo"] = report.silhouette_simplified_topo;
  j["simplified_topo_skipped"] =
      static_cast<std::int64_t>(report.simplified_topo_skipped);
  if (report.ari) {
    j["ari"] = *report.ari;
    j["nmi"] = *report.nmi;
    j["purity"] = *report.purity;
    j["degenerate_entropy"] = report.degenerate_entropy;
  }
  return j;
}

std::string artifact(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
        c == '-')
      out += c;
    else
      out += '_';
  }
  return out.empty() ? std::string("var") : out;
}

}  // namespace

DistributionalTable load_table(const std::string& path, TableFormat format) {
  if (format == TableFormat::Auto) {
    std::string ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    format = ext == ".csv" ? TableFormat::Csv : TableFormat::Json;
  }
  return format == TableFormat::Csv ? load_table_csv(path)
                                    : load_table_json(path);
}

void write_table(const DistributionalTable& table, const std::string& path) {
  table.validate();
  jsonv j;
  j["objects"] = table.objects;
  j["variables"] = table.variables;
  if (!table.labels.empty()) j["labels"] = table.labels;
  jsonv rows = jsonv::array();
  for (Index i = 0; i < table.n_objects(); ++i) {
    jsonv row = jsonv::array();
    for (Index v = 0; v < table.n_variables(); ++v)
      row.push_back(cell_json(table.at(i, v)));
    rows.push_back(row);
  }
  j["cells"] = rows;
  write_json_file(j, path);
}

AggregateResult aggregate_samples(const std::string& path, Index window,
                                  int bins) {
  if (bins < 1)
    throw_error(ErrorCode::InvariantViolation, "bins must be >= 1");
  if (window < bins)
    throw_error(ErrorCode::InvariantViolation,
                "window must be at least the bin count");

  CsvReader reader(path);
  std::vector<std::string> header;
  if (!reader.next(header))
    throw_error(ErrorCode::ParseError, path + ": empty file");
  const auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw_error(ErrorCode::ParseError,
                  path + ": header needs a '" + std::string(name) + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_obj = column("object");
  const std::size_t c_var = column("variable");
  const std::size_t c_val = column("value");

  std::vector<std::string> obj_order;
  std::unordered_map<std::string, std::size_t> obj_at;
  std::vector<std::string> var_order;
  std::unordered_map<std::string, std::size_t> var_at;
  // series[object][variable] -> samples in file order
  std::vector<std::vector<std::vector<double>>> series;

  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != header.size())
      throw_error(ErrorCode::ParseError,
                  reader.at() + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(row.size()));
    const auto [oit, onew] = obj_at.emplace(row[c_obj], obj_order.size());
    if (onew) {
      obj_order.push_back(row[c_obj]);
      series.emplace_back(var_order.size());
    }
    const auto [vit, vnew] = var_at.emplace(row[c_var], var_order.size());
    if (vnew) {
      var_order.push_back(row[c_var]);
      for (auto& per_obj : series) per_obj.resize(var_order.size());
    }
    series[oit->second][vit->second].push_back(
        parse_double(row[c_val], reader.at()));
  }
  if (obj_order.empty())
    throw_error(ErrorCode::EmptySample, path + ": no samples");

  AggregateResult result;
  result.table.variables = var_order;
  for (std::size_t o = 0; o < obj_order.size(); ++o) {
    const auto& vars = series[o];
    const std::size_t len = vars[0].size();
    for (std::size_t v = 1; v < vars.size(); ++v)
      if (vars[v].size() != len)
        throw_error(ErrorCode::RaggedSeries,
                    "object '" + obj_order[o] + "': variable '" + var_order[0] +
                        "' has " + std::to_string(len) +
                        " samples but variable '" + var_order[v] + "' has " +
                        std::to_string(vars[v].size()));
    const std::size_t n_win = len / static_cast<std::size_t>(window);
    const std::size_t tail = len - n_win * static_cast<std::size_t>(window);
    if (tail > 0)
      result.dropped.emplace_back(obj_order[o], static_cast<Index>(tail));
    for (std::size_t k = 0; k < n_win; ++k) {
      result.table.objects.push_back(obj_order[o] + "#w" + std::to_string(k));
      result.table.labels.push_back(obj_order[o]);
      for (std::size_t v = 0; v < var_order.size(); ++v) {
        const std::span<const double> slice(
            vars[v].data() + k * static_cast<std::size_t>(window),
            static_cast<std::size_t>(window));
        result.table.cells.push_back(qf_from_samples(slice, bins));
      }
    }
  }
  if (result.table.objects.empty())
    throw_error(ErrorCode::EmptySample,
                "every series is shorter than one window of " +
                    std::to_string(window));
  result.table.validate();
  return result;
}

RunResult run(const RunConfig& config) {
  if (config.input.empty() || config.output_dir.empty())
    throw_error(ErrorCode::InvariantViolation,
                "input path and output directory are required");
  if (config.n_iter < 1)
    throw_error(ErrorCode::InvariantViolation, "n_iter must be >= 1");
  if (config.restarts < 1)
    throw_error(ErrorCode::InvariantViolation, "restarts must be >= 1");
  if (config.algorithm == Algorithm::Adbsom && config.scheme == Scheme::None)
    throw_error(ErrorCode::SchemeMismatch, "adbsom needs a weighting scheme");
  if (config.algorithm == Algorithm::Dbsom && config.scheme != Scheme::None)
    throw_error(ErrorCode::SchemeMismatch,
                "dbsom does not take a weighting scheme");
  if ((config.rows == 0) != (config.cols == 0))
    throw_error(ErrorCode::InvariantViolation,
                "rows and cols must be given together");

  const DistributionalTable table = load_table(config.input);
  Index rows = config.rows;
  Index cols = config.cols;
  if (rows == 0) std::tie(rows, cols) = suggest_map_size(table.n_objects());
  const MapGrid grid(rows, cols, config.topology);

  TrainConfig tc;
  tc.algorithm = config.algorithm;
  tc.scheme = config.scheme;
  tc.n_iter = config.n_iter;
  tc.t_max = config.t_max;
  tc.t_min = config.t_min;
  tc.seed = config.seed;
  tc.standardize = config.standardize;

  TrainedMap map = multi_restart(table, grid, tc, config.restarts);
  const IndexReport report = config.standardize
                                 ? evaluate_map(standardize(table), map)
                                 : evaluate_map(table, map);

  write_json_file(map_json(map, config, table.objects),
                  artifact(config.output_dir, "map.json"));
  write_json_file(prototypes_json(map.prototypes, table.variables),
                  artifact(config.output_dir, "prototypes.json"));
  write_json_file(weights_json(map.weights, table.variables),
                  artifact(config.output_dir, "weights.json"));
  write_json_file(report_json(report),
                  artifact(config.output_dir, "report.json"));
  if (config.svg) export_svgs(config.output_dir);
  return {std::move(map), report};
}

IndexReport evaluate(const std::string& artifacts_dir,
                     const std::string& labels_path) {
  const std::string map_path = artifact(artifacts_dir, "map.json");
  const jsonv mapj = parse_json_file(map_path);
  const std::vector<std::string> objects =
      string_list(need(mapj, "objects", map_path), map_path + ": objects");
  const std::vector<Index> assignment = index_list(
      need(mapj, "assignment", map_path), map_path + ": assignment");
  if (objects.size() != assignment.size())
    throw_error(ErrorCode::ParseError,
                map_path + ": objects and assignment differ in length");

  std::unordered_map<std::string, std::size_t> object_at;
  for (std::size_t i = 0; i < objects.size(); ++i)
    object_at.emplace(objects[i], i);

  CsvReader reader(labels_path);
  std::vector<std::string> header;
  if (!reader.next(header))
    throw_error(ErrorCode::ParseError, labels_path + ": empty file");
  const auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw_error(ErrorCode::ParseError, labels_path + ": header needs a '" +
                                             std::string(name) + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_obj = column("object");
  const std::size_t c_lab = column("label");

  std::vector<std::string> labels(objects.size());
  std::vector<bool> seen(objects.size(), false);
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != header.size())
      throw_error(ErrorCode::ParseError,
                  reader.at() + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(row.size()));
    const auto it = object_at.find(row[c_obj]);
    if (it == object_at.end())
      throw_error(ErrorCode::UnknownObjectId,
                  reader.at() + ": label for unknown object '" + row[c_obj] +
                      "'");
    if (seen[it->second])
      throw_error(ErrorCode::InvariantViolation,
                  reader.at() + ": duplicate label for object '" + row[c_obj] +
                      "'");
    seen[it->second] = true;
    labels[it->second] = row[c_lab];
  }
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (!seen[i])
      throw_error(ErrorCode::LengthMismatch,
                  "object '" + objects[i] + "' has no label");

  const std::vector<Index> truth = encode_labels(labels);
  bool degenerate = false;
  const double v_ari = ari(assignment, truth);
  const double v_nmi = nmi(assignment, truth, &degenerate);
  const double v_purity = purity(assignment, truth);

  const std::string report_path = artifact(artifacts_dir, "report.json");
  jsonv rep = fs::exists(report_path) ? parse_json_file(report_path)
                                      : jsonv::object();
  rep["ari"] = v_ari;
  rep["nmi"] = v_nmi;
  rep["purity"] = v_purity;
  rep["degenerate_entropy"] = degenerate;
  write_json_file(rep, report_path);

  IndexReport out;
  out.topographic_error = rep.value("topographic_error", 0.0);
  out.silhouette = rep.value("silhouette", 0.0);
  out.silhouette_topo = rep.value("silhouette_topo", 0.0);
  out.silhouette_simplified = rep.value("silhouette_simplified", 0.0);
  out.silhouette_simplified_topo = rep.value("silhouette_simplified_topo", 0.0);
  out.topo_skipped = rep.value("topo_skipped", 0);
  out.simplified_topo_skipped = rep.value("simplified_topo_skipped", 0);
  out.ari = v_ari;
  out.nmi = v_nmi;
  out.purity = v_purity;
  out.degenerate_entropy = degenerate;
  return out;
}

std::vector<std::string> export_svgs(const std::string& artifacts_dir) {
  const std::string map_path = artifact(artifacts_dir, "map.json");
  const jsonv mapj = parse_json_file(map_path);
  const Index rows = need(mapj, "rows", map_path).get<Index>();
  const Index cols = need(mapj, "cols", map_path).get<Index>();
  const MapGrid grid(rows, cols,
                     topology_from_name(
                         need(mapj, "topology", map_path).get<std::string>()));
  const Eigen::VectorXd counts =
      number_list(need(mapj, "counts", map_path), map_path + ": counts");
  if (counts.size() != grid.size())
    throw_error(ErrorCode::DimensionMismatch,
                map_path + ": counts must have one entry per neuron");

  std::vector<std::string> written;
  const std::string counts_path = artifact(artifacts_dir, "counts.svg");
  write_text_atomic(counts_path,
                    render_hex_map(grid, counts, "objects per neuron", false));
  written.push_back(counts_path);

  const std::string weights_path = artifact(artifacts_dir, "weights.json");
  const jsonv wj = parse_json_file(weights_path);
  const Scheme scheme =
      scheme_from_name(need(wj, "scheme", weights_path).get<std::string>());
  const std::vector<std::string> variables = string_list(
      need(wj, "variables", weights_path), weights_path + ": variables");

  const auto per_neuron = [&](const Eigen::MatrixXd& m,
                              Index j) -> Eigen::VectorXd {
    if (m.rows() == 1)
      return Eigen::VectorXd::Constant(grid.size(), m(0, j));
    if (m.rows() != grid.size())
      throw_error(ErrorCode::DimensionMismatch,
                  weights_path + ": weight rows must be 1 or one per neuron");
    return m.col(j);
  };
  std::unordered_set<std::string> used;
  const auto filename = [&](const std::string& var, const char* suffix,
                            std::size_t j) {
    std::string stem = "weights-" + sanitize_name(var) + suffix;
    if (!used.insert(stem).second) {
      stem = "weights-" + sanitize_name(var) + "-" + std::to_string(j) + suffix;
      used.insert(stem);
    }
    return artifact(artifacts_dir, (stem + ".svg").c_str());
  };

  if (scheme_is_component(scheme)) {
    const Eigen::MatrixXd mean =
        json_matrix(need(wj, "mean", weights_path), weights_path + ": mean");
    const Eigen::MatrixXd disp = json_matrix(
        need(wj, "dispersion", weights_path), weights_path + ": dispersion");
    for (std::size_t j = 0; j < variables.size(); ++j) {
      const Index jc = static_cast<Index>(j);
      const std::string mp = filename(variables[j], "-mean", j);
      write_text_atomic(
          mp, render_hex_map(grid, per_neuron(mean, jc),
                             "relevance weight (mean part): " + variables[j],
                             true));
      written.push_back(mp);
      const std::string dp = filename(variables[j], "-disp", j);
      write_text_atomic(dp, render_hex_map(grid, per_neuron(disp, jc),
                                           "relevance weight (dispersion part): " +
                                               variables[j],
                                           true));
      written.push_back(dp);
    }
  } else {
    const Eigen::MatrixXd values = json_matrix(need(wj, "values", weights_path),
                                               weights_path + ": values");
    for (std::size_t j = 0; j < variables.size(); ++j) {
      const std::string p = filename(variables[j], "", j);
      write_text_atomic(
          p, render_hex_map(grid, per_neuron(values, static_cast<Index>(j)),
                            "relevance weight: " + variables[j], true));
      written.push_back(p);
    }
  }
  return written;
}

int exit_code(const Error& error) {
  switch (error.code()) {
    case ErrorCode::NonMonotoneBreaks:
    case ErrorCode::WeightsNotNormalized:
    case ErrorCode::EmptySample:
    case ErrorCode::ZeroDispersion:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::SchemeMismatch:
    case ErrorCode::ToroidalParity:
    case ErrorCode::TooManyNeurons:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::LengthMismatch:
    case ErrorCode::ParseError:
    case ErrorCode::InvariantViolation:
    case ErrorCode::RaggedSeries:
    case ErrorCode::UnknownObjectId:
      return 2;
    default:
      return 3;
  }
}

}  // namespace dbsom
