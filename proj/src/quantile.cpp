#include "dbsom/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dbsom {

QuantileFunction::QuantileFunction(Eigen::VectorXd probs,
                                   Eigen::VectorXd values)
    : probs_(std::move(probs)), values_(std::move(values)) {
  if (probs_.size() != values_.size())
    throw_error(ErrorCode::DimensionMismatch,
                "quantile function needs one value per prob knot");
  if (probs_.size() < 2)
    throw_error(ErrorCode::InvariantViolation,
                "quantile function needs at least 2 knots");
  if (!probs_.allFinite() || !values_.allFinite())
    throw_error(ErrorCode::NonFiniteInput,
                "quantile function knots must be finite");
  if (probs_(0) != 0.0 || probs_(probs_.size() - 1) != 1.0)
    throw_error(ErrorCode::InvariantViolation,
                "prob knots must start at 0 and end at 1");
  for (Index k = 1; k < probs_.size(); ++k) {
    if (probs_(k) <= probs_(k - 1))
      throw_error(ErrorCode::InvariantViolation,
                  "prob knots must be strictly increasing");
    if (values_(k) < values_(k - 1)) {
      // Averages of monotone sequences can dip by an ulp; clamp those, reject
      // anything larger.
      const double tol = 1e-9 * std::max(1.0, std::abs(values_(k - 1)));
      if (values_(k) < values_(k - 1) - tol)
        throw_error(ErrorCode::InvariantViolation,
                    "values must be non-decreasing");
      values_(k) = values_(k - 1);
    }
  }
}

double QuantileFunction::operator()(double p) const {
  p = std::clamp(p, 0.0, 1.0);
  const double* begin = probs_.data();
  const double* end = begin + probs_.size();
  // First knot strictly greater than p; p lies in the segment ending there.
  const double* hi = std::upper_bound(begin, end, p);
  if (hi == end) return values_(probs_.size() - 1);
  if (hi == begin) return values_(0);
  const Index s = static_cast<Index>(hi - begin) - 1;
  if (p == probs_(s)) return values_(s);
  const double t = (p - probs_(s)) / (probs_(s + 1) - probs_(s));
  return values_(s) + (values_(s + 1) - values_(s)) * t;
}

QuantileFunction QuantileFunction::dirac(double v) {
  Eigen::VectorXd p(2), q(2);
  p << 0.0, 1.0;
  q << v, v;
  return QuantileFunction(std::move(p), std::move(q));
}

QuantileFunction qf_from_histogram(const HistogramSpec& hist) {
  const Index bins = hist.weights.size();
  if (hist.breaks.size() != bins + 1)
    throw_error(ErrorCode::DimensionMismatch,
                "histogram needs one more break than weights");
  if (bins < 1)
    throw_error(ErrorCode::EmptySample, "histogram has no bins");
  if (!hist.breaks.allFinite() || !hist.weights.allFinite())
    throw_error(ErrorCode::NonFiniteInput, "histogram entries must be finite");
  for (Index k = 1; k < hist.breaks.size(); ++k)
    if (hist.breaks(k) <= hist.breaks(k - 1))
      throw_error(ErrorCode::NonMonotoneBreaks,
                  "histogram breaks must be strictly increasing");
  if ((hist.weights.array() < 0.0).any())
    throw_error(ErrorCode::WeightsNotNormalized,
                "histogram weights must be non-negative");
  if (std::abs(hist.weights.sum() - 1.0) > 1e-9)
    throw_error(ErrorCode::WeightsNotNormalized,
                "histogram weights must sum to 1");

  std::vector<double> probs, values;
  probs.reserve(bins + 1);
  values.reserve(bins + 1);
  double cum = 0.0;
  for (Index k = 0; k < bins; ++k) {
    if (hist.weights(k) == 0.0) continue;
    if (probs.empty()) {
      probs.push_back(0.0);
      values.push_back(hist.breaks(k));
    }
    // After a support gap the knot at this cum already exists with the lower
    // edge value; keep it and bridge from there.
    cum += hist.weights(k);
    probs.push_back(cum);
    values.push_back(hist.breaks(k + 1));
  }
  // cum matches 1 only within the normalization tolerance; the last knot is
  // the distribution's maximum, snap its level.
  probs.back() = 1.0;
  return QuantileFunction(
      Eigen::Map<const Eigen::VectorXd>(probs.data(), probs.size()),
      Eigen::Map<const Eigen::VectorXd>(values.data(), values.size()));
}

namespace {

// Linear quantile estimator on sorted data: h = (n-1)p, interpolate between
// the order statistics around h.
double linear_quantile(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(std::min(
      std::floor(h), static_cast<double>(n - 2)));
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

QuantileFunction qf_from_samples(std::span<const double> samples, int bins) {
  if (samples.empty())
    throw_error(ErrorCode::EmptySample, "no samples to aggregate");
  if (bins < 1)
    throw_error(ErrorCode::InvariantViolation, "bins must be >= 1");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double x : sorted)
    if (!std::isfinite(x))
      throw_error(ErrorCode::NonFiniteInput, "samples must be finite");
  std::sort(sorted.begin(), sorted.end());

  Eigen::VectorXd probs(bins + 1), values(bins + 1);
  for (int k = 0; k <= bins; ++k) {
    probs(k) = static_cast<double>(k) / bins;
    values(k) = linear_quantile(sorted, probs(k));
  }
  probs(0) = 0.0;
  probs(bins) = 1.0;
  return QuantileFunction(std::move(probs), std::move(values));
}

Eigen::VectorXd merge_probs(std::span<const QuantileFunction> qfs) {
  std::size_t total = 0;
  for (const auto& q : qfs) total += static_cast<std::size_t>(q.knots());
  std::vector<double> all;
  all.reserve(total);
  for (const auto& q : qfs)
    all.insert(all.end(), q.probs().data(), q.probs().data() + q.knots());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return Eigen::Map<const Eigen::VectorXd>(all.data(), all.size());
}

Eigen::VectorXd values_on_grid(const QuantileFunction& q,
                               const Eigen::VectorXd& grid) {
  const Eigen::VectorXd& p = q.probs();
  const Eigen::VectorXd& v = q.values();
  const Index K = q.knots();
  Eigen::VectorXd out(grid.size());
  Index s = 0;
  for (Index k = 0; k < grid.size(); ++k) {
    const double g = std::clamp(grid(k), 0.0, 1.0);
    while (s + 2 < K && g >= p(s + 1)) ++s;
    if (g <= p(s)) {
      out(k) = v(s);
    } else if (g >= p(s + 1)) {
      out(k) = v(s + 1);
    } else {
      const double t = (g - p(s)) / (p(s + 1) - p(s));
      out(k) = v(s) + (v(s + 1) - v(s)) * t;
    }
  }
  return out;
}

std::pair<QuantileFunction, QuantileFunction> register_pair(
    const QuantileFunction& a, const QuantileFunction& b) {
  const QuantileFunction pair_in[2] = {a, b};
  Eigen::VectorXd grid = merge_probs(std::span<const QuantileFunction>(pair_in, 2));
  Eigen::VectorXd va = values_on_grid(a, grid);
  Eigen::VectorXd vb = values_on_grid(b, grid);
  return {QuantileFunction(grid, std::move(va)),
          QuantileFunction(std::move(grid), std::move(vb))};
}

double mean(const QuantileFunction& q) {
  const Index K = q.knots();
  const auto& p = q.probs();
  const auto& v = q.values();
  return 0.5 * ((p.tail(K - 1) - p.head(K - 1)).array() *
                (v.tail(K - 1) + v.head(K - 1)).array())
                   .sum();
}

QuantileFunction center(const QuantileFunction& q) {
  Eigen::VectorXd shifted = q.values().array() - mean(q);
  return QuantileFunction(q.probs(), std::move(shifted));
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& probs) {
  const Index K = probs.size();
  Eigen::VectorXd h = probs.tail(K - 1) - probs.head(K - 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
  w.head(K - 1) += 0.5 * h;
  w.tail(K - 1) += 0.5 * h;
  return w;
}

double pl_square_integral(const Eigen::VectorXd& probs,
                          const Eigen::VectorXd& values) {
  const Index K = probs.size();
  const auto h = (probs.tail(K - 1) - probs.head(K - 1)).array();
  const auto v0 = values.head(K - 1).array();
  const auto v1 = values.tail(K - 1).array();
  return (h * (v0.square() + v0 * v1 + v1.square())).sum() / 3.0;
}

Eigen::MatrixXd l2_gram(const Eigen::VectorXd& probs,
                        const Eigen::MatrixXd& rows) {
  const Index K = probs.size();
  if (rows.cols() != K)
    throw_error(ErrorCode::DimensionMismatch,
                "rows must have one column per prob knot");
  Eigen::VectorXd h = probs.tail(K - 1) - probs.head(K - 1);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(K);
  diag.head(K - 1) += h / 3.0;
  diag.tail(K - 1) += h / 3.0;
  Eigen::VectorXd off = h / 6.0;
  // B = rows * A with A the tridiagonal matrix of segment inner products.
  Eigen::MatrixXd B = rows * diag.asDiagonal();
  B.leftCols(K - 1) += rows.rightCols(K - 1) * off.asDiagonal();
  B.rightCols(K - 1) += rows.leftCols(K - 1) * off.asDiagonal();
  return B * rows.transpose();
}

}  // namespace dbsom
