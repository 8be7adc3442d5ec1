#pragma once

#include <span>
#include <string>
#include <vector>

#include "dbsom/quantile.hpp"

namespace dbsom {

// N objects x P distributional variables, row-major cells. labels is either
// empty or one class label per object (used by the external validity
// indexes only).
struct DistributionalTable {
  std::vector<std::string> objects;
  std::vector<std::string> variables;
  std::vector<std::string> labels;
  std::vector<QuantileFunction> cells;

  Index n_objects() const { return static_cast<Index>(objects.size()); }
  Index n_variables() const { return static_cast<Index>(variables.size()); }

  const QuantileFunction& at(Index i, Index j) const {
    return cells[static_cast<std::size_t>(i * n_variables() + j)];
  }
  std::span<const QuantileFunction> row(Index i) const {
    return {cells.data() + i * n_variables(),
            static_cast<std::size_t>(n_variables())};
  }

  void validate() const;
};

// One prototype row per neuron, aligned with the table's variables.
struct Prototypes {
  Index neurons = 0;
  Index variables = 0;
  std::vector<QuantileFunction> cells;  // row-major neurons x variables

  const QuantileFunction& at(Index m, Index j) const {
    return cells[static_cast<std::size_t>(m * variables + j)];
  }
  std::span<const QuantileFunction> row(Index m) const {
    return {cells.data() + m * variables, static_cast<std::size_t>(variables)};
  }
};

// Barycenter sum_i w_i Q_i / sum_i w_i on the union knot grid; the exact
// minimizer of sum_i w_i d2w(Q_i, g). Weights must be non-negative with a
// positive, finite sum (ZeroKernelMass otherwise).
QuantileFunction weighted_barycenter(std::span<const QuantileFunction> qfs,
                                     const Eigen::VectorXd& weights);

// Unweighted Frechet mean of column j.
QuantileFunction column_barycenter(const DistributionalTable& table, Index j);

// Frechet standard deviation of column j: sqrt of the average squared
// Wasserstein distance to the column barycenter. A column of identical
// distributions yields 0 and sets *degenerate.
double variable_std(const DistributionalTable& table, Index j,
                    bool* degenerate = nullptr);

// Divide every cell of each column by that column's Frechet std. Throws
// ZeroDispersion if any column is constant.
DistributionalTable standardize(const DistributionalTable& table);

}  // namespace dbsom
