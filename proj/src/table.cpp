#include "dbsom/table.hpp"

#include <cmath>

#include "dbsom/wasserstein.hpp"

namespace dbsom {

void DistributionalTable::validate() const {
  const auto n = objects.size();
  const auto p = variables.size();
  if (n == 0 || p == 0)
    throw_error(ErrorCode::EmptySample, "table has no objects or variables");
  if (cells.size() != n * p)
    throw_error(ErrorCode::DimensionMismatch,
                "table needs one cell per (object, variable)");
  if (!labels.empty() && labels.size() != n)
    throw_error(ErrorCode::DimensionMismatch,
                "labels must be empty or one per object");
}

QuantileFunction weighted_barycenter(std::span<const QuantileFunction> qfs,
                                     const Eigen::VectorXd& weights) {
  if (qfs.empty())
    throw_error(ErrorCode::EmptySample, "barycenter of no distributions");
  if (weights.size() != static_cast<Index>(qfs.size()))
    throw_error(ErrorCode::DimensionMismatch,
                "one weight per distribution required");
  const double total = weights.sum();
  if (!std::isfinite(total) || total <= 0.0 ||
      (weights.array() < 0.0).any())
    throw_error(ErrorCode::ZeroKernelMass,
                "barycenter weights must be non-negative with positive sum");
  Eigen::VectorXd grid = merge_probs(qfs);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid.size());
  for (std::size_t i = 0; i < qfs.size(); ++i) {
    const double w = weights(static_cast<Index>(i));
    if (w != 0.0) acc += w * values_on_grid(qfs[i], grid);
  }
  acc /= total;
  return QuantileFunction(std::move(grid), std::move(acc));
}

namespace {

std::vector<QuantileFunction> column(const DistributionalTable& table,
                                     Index j) {
  std::vector<QuantileFunction> col;
  col.reserve(static_cast<std::size_t>(table.n_objects()));
  for (Index i = 0; i < table.n_objects(); ++i) col.push_back(table.at(i, j));
  return col;
}

}  // namespace

QuantileFunction column_barycenter(const DistributionalTable& table, Index j) {
  if (j < 0 || j >= table.n_variables())
    throw_error(ErrorCode::IndexOutOfRange, "no such variable column");
  const auto col = column(table, j);
  return weighted_barycenter(col, Eigen::VectorXd::Ones(table.n_objects()));
}

double variable_std(const DistributionalTable& table, Index j,
                    bool* degenerate) {
  const QuantileFunction bar = column_barycenter(table, j);
  double acc = 0.0;
  for (Index i = 0; i < table.n_objects(); ++i)
    acc += w2_squared(table.at(i, j), bar);
  const double sd = std::sqrt(acc / static_cast<double>(table.n_objects()));
  if (degenerate) *degenerate = (sd == 0.0);
  return sd;
}

DistributionalTable standardize(const DistributionalTable& table) {
  table.validate();
  Eigen::VectorXd sd(table.n_variables());
  for (Index j = 0; j < table.n_variables(); ++j) {
    sd(j) = variable_std(table, j);
    if (sd(j) <= 0.0)
      throw_error(ErrorCode::ZeroDispersion,
                  "variable '" + table.variables[static_cast<std::size_t>(j)] +
                      "' has zero dispersion");
  }
  DistributionalTable out;
  out.objects = table.objects;
  out.variables = table.variables;
  out.labels = table.labels;
  out.cells.reserve(table.cells.size());
  for (Index i = 0; i < table.n_objects(); ++i)
    for (Index j = 0; j < table.n_variables(); ++j) {
      const QuantileFunction& q = table.at(i, j);
      out.cells.emplace_back(q.probs(),
                             Eigen::VectorXd(q.values() / sd(j)));
    }
  return out;
}

}  // namespace dbsom
