#pragma once

#include <Eigen/Core>
#include <string>

#include "dbsom/error.hpp"

namespace dbsom {

using Index = Eigen::Index;

// Relevance-weight layout. The four adaptive schemes differ on two axes:
// whether weights are shared by all neurons (global) or per neuron
// (cluster-wise), and whether one weight covers a whole variable or the
// mean/dispersion components get separate weights. None means no adaptive
// weighting (all weights 1).
enum class Scheme {
  None,
  GlobalVariable,     // one weight per variable
  GlobalComponent,    // one weight per variable component
  ClusterVariable,    // one weight per (neuron, variable)
  ClusterComponent,   // one weight per (neuron, variable component)
};

const char* scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);
bool scheme_is_component(Scheme scheme);
bool scheme_is_cluster(Scheme scheme);

// values has one row per neuron for cluster-wise schemes and a single row
// otherwise. Variable schemes store P columns; component schemes store 2P
// columns, the mean-part block [0, P) followed by the dispersion-part block
// [P, 2P). All weights are positive and every constraint group (row for
// variable schemes, row incl. both blocks for component schemes) has product
// 1 within 1e-9.
struct WeightMatrix {
  Scheme scheme = Scheme::None;
  Eigen::MatrixXd values;

  static WeightMatrix unit(Index n_variables);

  Index n_variables() const {
    return scheme_is_component(scheme) ? values.cols() / 2 : values.cols();
  }

  // Weight applied to the mean (dispersion) part of variable j in distances
  // to neuron m. Variable schemes apply the same weight to both parts; None
  // returns 1.
  double mean_weight(Index m, Index j) const;
  double disp_weight(Index m, Index j) const;

  // Largest |product - 1| over all constraint groups.
  double max_product_residual() const;

  // Shape/positivity check against a map of n_neurons x n_vars.
  void validate(Index n_neurons, Index n_vars) const;
};

}  // namespace dbsom
