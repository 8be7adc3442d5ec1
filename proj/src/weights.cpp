#include "dbsom/weights.hpp"

#include <cmath>

namespace dbsom {

const char* scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::None: return "none";
    case Scheme::GlobalVariable: return "global-variable";
    case Scheme::GlobalComponent: return "global-component";
    case Scheme::ClusterVariable: return "cluster-variable";
    case Scheme::ClusterComponent: return "cluster-component";
  }
  return "none";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "none") return Scheme::None;
  if (name == "global-variable" || name == "p1") return Scheme::GlobalVariable;
  if (name == "global-component" || name == "p2")
    return Scheme::GlobalComponent;
  if (name == "cluster-variable" || name == "p3")
    return Scheme::ClusterVariable;
  if (name == "cluster-component" || name == "p4")
    return Scheme::ClusterComponent;
  throw_error(ErrorCode::SchemeMismatch, "unknown weighting scheme '" + name +
                                             "'");
}

bool scheme_is_component(Scheme scheme) {
  return scheme == Scheme::GlobalComponent ||
         scheme == Scheme::ClusterComponent;
}

bool scheme_is_cluster(Scheme scheme) {
  return scheme == Scheme::ClusterVariable ||
         scheme == Scheme::ClusterComponent;
}

WeightMatrix WeightMatrix::unit(Index n_variables) {
  WeightMatrix w;
  w.scheme = Scheme::None;
  w.values = Eigen::MatrixXd::Ones(1, n_variables);
  return w;
}

double WeightMatrix::mean_weight(Index m, Index j) const {
  if (scheme == Scheme::None) return 1.0;
  const Index row = scheme_is_cluster(scheme) ? m : 0;
  return values(row, j);
}

double WeightMatrix::disp_weight(Index m, Index j) const {
  if (scheme == Scheme::None) return 1.0;
  const Index row = scheme_is_cluster(scheme) ? m : 0;
  return values(row, scheme_is_component(scheme) ? n_variables() + j : j);
}

double WeightMatrix::max_product_residual() const {
  if (scheme == Scheme::None) return 0.0;
  double worst = 0.0;
  for (Index m = 0; m < values.rows(); ++m) {
    double prod = 1.0;
    for (Index c = 0; c < values.cols(); ++c) prod *= values(m, c);
    worst = std::max(worst, std::abs(prod - 1.0));
  }
  return worst;
}

void WeightMatrix::validate(Index n_neurons, Index n_vars) const {
  const Index expect_rows =
      scheme_is_cluster(scheme) ? n_neurons : Index{1};
  const Index expect_cols =
      scheme_is_component(scheme) ? 2 * n_vars : n_vars;
  if (values.rows() != expect_rows || values.cols() != expect_cols)
    throw_error(ErrorCode::SchemeMismatch,
                std::string("weight matrix shape does not match scheme ") +
                    scheme_name(scheme));
  if (!values.allFinite() || (values.array() <= 0.0).any())
    throw_error(ErrorCode::InvariantViolation,
                "weights must be positive and finite");
  if (scheme != Scheme::None && max_product_residual() > 1e-9)
    throw_error(ErrorCode::InvariantViolation,
                "weight products must equal 1");
}

}  // namespace dbsom
