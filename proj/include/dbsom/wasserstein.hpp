#pragma once

#include <span>

#include "dbsom/map_grid.hpp"
#include "dbsom/quantile.hpp"
#include "dbsom/table.hpp"
#include "dbsom/weights.hpp"

namespace dbsom {

// Squared L2 Wasserstein distance: the exact integral over [0,1] of the
// squared difference of the two quantile functions, evaluated segment-wise
// on the union knot grid (the difference of linears is linear, so each
// segment integrates in closed form).
double w2_squared(const QuantileFunction& a, const QuantileFunction& b);

// Split of w2_squared into the squared distance between the means and the
// squared distance between the centered quantile functions. The parts are
// non-negative and sum to w2_squared.
struct DistanceComponents {
  double mean_sq = 0.0;
  double disp_sq = 0.0;
  double total() const { return mean_sq + disp_sq; }
};

DistanceComponents decompose(const QuantileFunction& a,
                             const QuantileFunction& b);

// Sum of w2_squared over aligned variables.
double mv_w2_squared(std::span<const QuantileFunction> a,
                     std::span<const QuantileFunction> b);

// Relevance-weighted squared distance between an object row and neuron m's
// prototype row: sum_j lambda_mean(m,j) * mean_sq_j + lambda_disp(m,j) *
// disp_sq_j. With unit weights this equals mv_w2_squared.
double adaptive_distance(std::span<const QuantileFunction> y,
                         std::span<const QuantileFunction> g,
                         const WeightMatrix& weights, Index neuron);

// Kernel-smoothed distance of an object to neuron m: every neuron h
// contributes its adaptive distance attenuated by the neighbourhood kernel
// K(d(m,h), T).
double generalized_distance(std::span<const QuantileFunction> y, Index neuron,
                            const Prototypes& prototypes, const MapGrid& grid,
                            double T, const WeightMatrix& weights);

}  // namespace dbsom
