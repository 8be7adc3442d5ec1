#pragma once

#include <Eigen/Core>
#include <span>
#include <utility>

#include "dbsom/error.hpp"

namespace dbsom {

using Index = Eigen::Index;

// A distribution represented by its quantile function (inverse CDF): a
// continuous piecewise-linear map from [0,1] to the value axis. probs are
// strictly increasing with probs[0] = 0 and probs[last] = 1; values are
// non-decreasing. This is the canonical representation: every distance and
// barycenter in the library is computed segment-exactly on these knots, no
// fixed evaluation grid is involved.
class QuantileFunction {
 public:
  QuantileFunction(Eigen::VectorXd probs, Eigen::VectorXd values);

  const Eigen::VectorXd& probs() const { return probs_; }
  const Eigen::VectorXd& values() const { return values_; }
  Index knots() const { return probs_.size(); }

  // Evaluate at p (clamped to [0,1]).
  double operator()(double p) const;

  // Point mass at v.
  static QuantileFunction dirac(double v);

 private:
  Eigen::VectorXd probs_;
  Eigen::VectorXd values_;
};

struct HistogramSpec {
  Eigen::VectorXd breaks;   // k+1 strictly increasing bin edges
  Eigen::VectorXd weights;  // k non-negative weights summing to 1 (tol 1e-9)
};

// Exact inverse CDF of the histogram under uniform density within each bin.
// Knots sit at cumulative weights. Zero-weight bins contribute no knot
// interval; an *interior* zero-weight bin is a support gap whose inverse-CDF
// jump cannot be represented by a continuous function, so the lower-value
// knot is kept (left-continuous generalized inverse) and the next segment
// bridges the gap.
QuantileFunction qf_from_histogram(const HistogramSpec& hist);

// Equi-depth histogram of the samples: bin edges at empirical quantile
// levels k/bins. Quantiles use the linear estimator h = (n-1)p + 1 on order
// statistics (the numpy/R default "linear"), so level 0 maps to the minimum
// and level 1 to the maximum.
QuantileFunction qf_from_samples(std::span<const double> samples,
                                 int bins = 10);

// Rewrite both functions on the union of their prob knots. A pure
// refinement: function values are unchanged at every p.
std::pair<QuantileFunction, QuantileFunction> register_pair(
    const QuantileFunction& a, const QuantileFunction& b);

// Expectation of the distribution, i.e. the exact integral of Q over [0,1].
double mean(const QuantileFunction& q);

// Same distribution shifted to mean zero.
QuantileFunction center(const QuantileFunction& q);

// Shared-grid helpers used by the training and validity hot paths.

// Union of the prob knots of all functions (exact dedupe).
Eigen::VectorXd merge_probs(std::span<const QuantileFunction> qfs);

// Values of q at each grid point; exact refinement when grid contains q's
// own knots.
Eigen::VectorXd values_on_grid(const QuantileFunction& q,
                               const Eigen::VectorXd& grid);

// Quadrature weights w with w.dot(values) = integral of the piecewise-linear
// function through (probs, values). Exact (trapezoid on the knots).
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& probs);

// Exact integral of f(p)^2 over [0,1] for the piecewise-linear f given by
// its values on the knot grid.
double pl_square_integral(const Eigen::VectorXd& probs,
                          const Eigen::VectorXd& values);

// Gram matrix of exact L2 inner products between the piecewise-linear rows:
// out(i, k) = integral of row_i(p) * row_k(p) dp. rows is N x K on a shared
// grid of K knots.
Eigen::MatrixXd l2_gram(const Eigen::VectorXd& probs,
                        const Eigen::MatrixXd& rows);

}  // namespace dbsom
