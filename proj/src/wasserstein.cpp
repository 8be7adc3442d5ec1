#include "dbsom/wasserstein.hpp"

namespace dbsom {

namespace {

// Walk the union of the two knot sets once, accumulating the exact integral
// of (A - B - shift)^2 segment by segment.
double squared_diff_integral(const QuantileFunction& a,
                             const QuantileFunction& b, double shift) {
  const QuantileFunction pair_in[2] = {a, b};
  const Eigen::VectorXd grid =
      merge_probs(std::span<const QuantileFunction>(pair_in, 2));
  const Eigen::VectorXd diff = (values_on_grid(a, grid) -
                                values_on_grid(b, grid)).array() - shift;
  return pl_square_integral(grid, diff);
}

}  // namespace

double w2_squared(const QuantileFunction& a, const QuantileFunction& b) {
  return squared_diff_integral(a, b, 0.0);
}

DistanceComponents decompose(const QuantileFunction& a,
                             const QuantileFunction& b) {
  const double delta = mean(a) - mean(b);
  DistanceComponents parts;
  parts.mean_sq = delta * delta;
  // Centering both functions only shifts their difference by delta.
  parts.disp_sq = squared_diff_integral(a, b, delta);
  return parts;
}

double mv_w2_squared(std::span<const QuantileFunction> a,
                     std::span<const QuantileFunction> b) {
  if (a.size() != b.size() || a.empty())
    throw_error(ErrorCode::DimensionMismatch,
                "rows must have the same non-zero number of variables");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += w2_squared(a[j], b[j]);
  return acc;
}

double adaptive_distance(std::span<const QuantileFunction> y,
                         std::span<const QuantileFunction> g,
                         const WeightMatrix& weights, Index neuron) {
  if (y.size() != g.size() || y.empty())
    throw_error(ErrorCode::DimensionMismatch,
                "rows must have the same non-zero number of variables");
  const auto p = static_cast<Index>(y.size());
  if (weights.scheme != Scheme::None && weights.n_variables() != p)
    throw_error(ErrorCode::SchemeMismatch,
                "weight matrix does not cover the row's variables");
  if (scheme_is_cluster(weights.scheme) &&
      (neuron < 0 || neuron >= weights.values.rows()))
    throw_error(ErrorCode::IndexOutOfRange, "no weight row for this neuron");

  double acc = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double wm = weights.mean_weight(neuron, j);
    const double wv = weights.disp_weight(neuron, j);
    if (wm == wv) {
      acc += wm * w2_squared(y[j], g[j]);
    } else {
      const DistanceComponents parts = decompose(y[j], g[j]);
      acc += wm * parts.mean_sq + wv * parts.disp_sq;
    }
  }
  return acc;
}

double generalized_distance(std::span<const QuantileFunction> y, Index neuron,
                            const Prototypes& prototypes, const MapGrid& grid,
                            double T, const WeightMatrix& weights) {
  if (prototypes.neurons != grid.size())
    throw_error(ErrorCode::DimensionMismatch,
                "one prototype row per neuron required");
  if (neuron < 0 || neuron >= grid.size())
    throw_error(ErrorCode::IndexOutOfRange, "no such neuron");
  double acc = 0.0;
  for (Index h = 0; h < grid.size(); ++h)
    acc += kernel(grid.distance(neuron, h), T) *
           adaptive_distance(y, prototypes.row(h), weights, h);
  return acc;
}

}  // namespace dbsom
