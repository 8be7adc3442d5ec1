#include "dbsom/som.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dbsom/rng.hpp"

namespace dbsom {

const char* algorithm_name(Algorithm algorithm) {
  return algorithm == Algorithm::Dbsom ? "dbsom" : "adbsom";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "dbsom") return Algorithm::Dbsom;
  if (name == "adbsom") return Algorithm::Adbsom;
  throw_error(ErrorCode::ParseError, "unknown algorithm '" + name + "'");
}

std::vector<Index> TrainedMap::neuron_counts() const {
  std::vector<Index> counts(static_cast<std::size_t>(grid.size()), 0);
  for (Index m : assignment) counts[static_cast<std::size_t>(m)]++;
  return counts;
}

namespace {

void check_assignment(std::span<const Index> assignment, Index n, Index m) {
  if (static_cast<Index>(assignment.size()) != n)
    throw_error(ErrorCode::DimensionMismatch, "one BMU per object required");
  for (Index f : assignment)
    if (f < 0 || f >= m)
      throw_error(ErrorCode::IndexOutOfRange, "BMU index outside the grid");
}

void check_prototypes(const Prototypes& prototypes, const MapGrid& grid,
                      Index p) {
  if (prototypes.neurons != grid.size() || prototypes.variables != p)
    throw_error(ErrorCode::DimensionMismatch,
                "prototypes must be neurons x variables");
}

// Shared closed form of the weighting step: each weight is the geometric
// mean of its constraint group's pools over its own pool. Component schemes
// pass both pools; variable schemes are handled by pooling mean and
// dispersion parts before the call. Pool rows: 1 for global schemes, one per
// neuron for cluster-wise schemes.
WeightMatrix weights_from_pools(Scheme scheme, const Eigen::MatrixXd& pool_m,
                                const Eigen::MatrixXd& pool_v,
                                bool* degenerate) {
  const Index rows = pool_m.rows();
  const Index p = pool_m.cols();
  WeightMatrix out;
  out.scheme = scheme;
  const bool component = scheme_is_component(scheme);

  const double total = pool_m.sum() + pool_v.sum();
  bool clamped = false;
  if (!(total > 0.0)) {
    out.values = Eigen::MatrixXd::Ones(rows, component ? 2 * p : p);
    if (degenerate) *degenerate = true;
    return out;
  }
  const double eps = 1e-12 * total;

  auto clamp_log = [&](double pool) {
    if (pool < eps) {
      clamped = true;
      pool = eps;
    }
    return std::log(pool);
  };

  out.values.resize(rows, component ? 2 * p : p);
  for (Index r = 0; r < rows; ++r) {
    if (component) {
      Eigen::ArrayXd lm(p), lv(p);
      for (Index j = 0; j < p; ++j) {
        lm(j) = clamp_log(pool_m(r, j));
        lv(j) = clamp_log(pool_v(r, j));
      }
      const double gmean = (lm.sum() + lv.sum()) / (2.0 * static_cast<double>(p));
      for (Index j = 0; j < p; ++j) {
        out.values(r, j) = std::exp(gmean - lm(j));
        out.values(r, p + j) = std::exp(gmean - lv(j));
      }
    } else {
      Eigen::ArrayXd lp(p);
      for (Index j = 0; j < p; ++j)
        lp(j) = clamp_log(pool_m(r, j) + pool_v(r, j));
      const double gmean = lp.sum() / static_cast<double>(p);
      for (Index j = 0; j < p; ++j) out.values(r, j) = std::exp(gmean - lp(j));
    }
  }
  if (degenerate && clamped) *degenerate = true;
  return out;
}

}  // namespace

double criterion(const DistributionalTable& table, const Prototypes& prototypes,
                 const WeightMatrix& weights,
                 std::span<const Index> assignment, const MapGrid& grid,
                 double T) {
  table.validate();
  check_prototypes(prototypes, grid, table.n_variables());
  check_assignment(assignment, table.n_objects(), grid.size());
  double acc = 0.0;
  for (Index i = 0; i < table.n_objects(); ++i)
    acc += generalized_distance(table.row(i), assignment[static_cast<std::size_t>(i)],
                                prototypes, grid, T, weights);
  return acc;
}

QuantileFunction representation_step(const DistributionalTable& table,
                                     std::span<const Index> assignment,
                                     const MapGrid& grid, double T,
                                     Index neuron, Index variable) {
  table.validate();
  check_assignment(assignment, table.n_objects(), grid.size());
  if (neuron < 0 || neuron >= grid.size())
    throw_error(ErrorCode::IndexOutOfRange, "no such neuron");
  if (variable < 0 || variable >= table.n_variables())
    throw_error(ErrorCode::IndexOutOfRange, "no such variable");
  const Index n = table.n_objects();
  Eigen::VectorXd w(n);
  for (Index i = 0; i < n; ++i)
    w(i) = kernel(grid.distance(assignment[static_cast<std::size_t>(i)], neuron), T);
  std::vector<QuantileFunction> col;
  col.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) col.push_back(table.at(i, variable));
  return weighted_barycenter(col, w);
}

Prototypes representation_all(const DistributionalTable& table,
                              std::span<const Index> assignment,
                              const MapGrid& grid, double T) {
  Prototypes out;
  out.neurons = grid.size();
  out.variables = table.n_variables();
  out.cells.reserve(static_cast<std::size_t>(out.neurons * out.variables));
  for (Index m = 0; m < out.neurons; ++m)
    for (Index j = 0; j < out.variables; ++j)
      out.cells.push_back(representation_step(table, assignment, grid, T, m, j));
  return out;
}

WeightMatrix weighting_step(const DistributionalTable& table,
                            const Prototypes& prototypes,
                            std::span<const Index> assignment,
                            const MapGrid& grid, double T, Scheme scheme,
                            bool* degenerate) {
  if (scheme == Scheme::None)
    throw_error(ErrorCode::SchemeMismatch,
                "weighting step needs an adaptive scheme");
  table.validate();
  check_prototypes(prototypes, grid, table.n_variables());
  check_assignment(assignment, table.n_objects(), grid.size());

  const Index n = table.n_objects();
  const Index m = grid.size();
  const Index p = table.n_variables();
  Eigen::MatrixXd pool_m = Eigen::MatrixXd::Zero(m, p);
  Eigen::MatrixXd pool_v = Eigen::MatrixXd::Zero(m, p);
  for (Index i = 0; i < n; ++i) {
    const Index bmu = assignment[static_cast<std::size_t>(i)];
    for (Index h = 0; h < m; ++h) {
      const double k = kernel(grid.distance(bmu, h), T);
      for (Index j = 0; j < p; ++j) {
        const DistanceComponents parts =
            decompose(table.at(i, j), prototypes.at(h, j));
        pool_m(h, j) += k * parts.mean_sq;
        pool_v(h, j) += k * parts.disp_sq;
      }
    }
  }
  if (!scheme_is_cluster(scheme)) {
    pool_m = pool_m.colwise().sum().eval();
    pool_v = pool_v.colwise().sum().eval();
  }
  return weights_from_pools(scheme, pool_m, pool_v, degenerate);
}

std::vector<Index> assignment_step(const DistributionalTable& table,
                                   const Prototypes& prototypes,
                                   const WeightMatrix& weights,
                                   const MapGrid& grid, double T) {
  table.validate();
  check_prototypes(prototypes, grid, table.n_variables());
  const Index n = table.n_objects();
  const Index m = grid.size();
  std::vector<Index> f(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    double best_d = generalized_distance(table.row(i), 0, prototypes, grid, T,
                                         weights);
    for (Index r = 1; r < m; ++r) {
      const double d =
          generalized_distance(table.row(i), r, prototypes, grid, T, weights);
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    f[static_cast<std::size_t>(i)] = best;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Training engine. All data columns are registered once onto their union
// knot grid; distances to prototypes then reduce to quadratic forms with the
// per-column centered Gram matrix, and each epoch is a handful of dense
// matrix products.

namespace {

struct ColumnCache {
  Eigen::VectorXd grid;     // union probs, K knots
  Eigen::MatrixXd vals;     // N x K registered values
  Eigen::VectorXd mu;       // N means
  Eigen::MatrixXd gram_c;   // N x N Gram of centered rows
  Eigen::VectorXd self_c;   // diagonal of gram_c
};

struct Engine {
  const MapGrid* grid = nullptr;
  Index n = 0, m = 0, p = 0;
  std::vector<ColumnCache> columns;

  void build(const DistributionalTable& table, const MapGrid& g) {
    grid = &g;
    n = table.n_objects();
    m = g.size();
    p = table.n_variables();
    columns.clear();
    columns.resize(static_cast<std::size_t>(p));
    std::vector<QuantileFunction> col;
    for (Index j = 0; j < p; ++j) {
      col.clear();
      col.reserve(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) col.push_back(table.at(i, j));
      ColumnCache& c = columns[static_cast<std::size_t>(j)];
      c.grid = merge_probs(col);
      c.vals.resize(n, c.grid.size());
      for (Index i = 0; i < n; ++i)
        c.vals.row(i) = values_on_grid(col[static_cast<std::size_t>(i)], c.grid);
      c.mu = c.vals * trapezoid_weights(c.grid);
      Eigen::MatrixXd centered =
          c.vals - c.mu * Eigen::RowVectorXd::Ones(c.grid.size());
      c.gram_c = l2_gram(c.grid, centered);
      c.self_c = c.gram_c.diagonal();
    }
  }
};

// Distance component tables against the prototypes implied by a
// column-stochastic mixing matrix Wn (prototype row m = Wn.col(m)-weighted
// barycenter of the data rows).
struct DistTables {
  std::vector<Eigen::MatrixXd> d_mean;  // per variable, N x M
  std::vector<Eigen::MatrixXd> d_disp;  // per variable, N x M
};

DistTables component_tables(const Engine& e, const Eigen::MatrixXd& mix) {
  DistTables t;
  t.d_mean.reserve(e.columns.size());
  t.d_disp.reserve(e.columns.size());
  for (const ColumnCache& c : e.columns) {
    Eigen::VectorXd proto_mu = mix.transpose() * c.mu;                 // M
    Eigen::MatrixXd cross = c.gram_c * mix;                            // N x M
    Eigen::RowVectorXd proto_self =
        (mix.array() * cross.array()).colwise().sum().matrix();        // 1 x M
    Eigen::MatrixXd dv = -2.0 * cross;
    dv.colwise() += c.self_c;
    dv.rowwise() += proto_self;
    t.d_disp.push_back(dv.cwiseMax(0.0));
    Eigen::MatrixXd dm = (c.mu.replicate(1, e.m) -
                          proto_mu.transpose().replicate(e.n, 1))
                             .array()
                             .square()
                             .matrix();
    t.d_mean.push_back(std::move(dm));
  }
  return t;
}

// Adaptive per-neuron distances: base(i, m) = weighted component sum.
Eigen::MatrixXd combine_tables(const Engine& e, const DistTables& t,
                               const WeightMatrix& w) {
  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(e.n, e.m);
  for (Index j = 0; j < e.p; ++j) {
    const auto& dm = t.d_mean[static_cast<std::size_t>(j)];
    const auto& dv = t.d_disp[static_cast<std::size_t>(j)];
    switch (w.scheme) {
      case Scheme::None:
        base += dm + dv;
        break;
      case Scheme::GlobalVariable:
        base += w.values(0, j) * (dm + dv);
        break;
      case Scheme::GlobalComponent:
        base += w.values(0, j) * dm + w.values(0, e.p + j) * dv;
        break;
      case Scheme::ClusterVariable:
        base += (dm + dv) * w.values.col(j).asDiagonal();
        break;
      case Scheme::ClusterComponent:
        base += dm * w.values.col(j).asDiagonal() +
                dv * w.values.col(e.p + j).asDiagonal();
        break;
    }
  }
  return base;
}

std::vector<Index> argmin_rows(const Eigen::MatrixXd& d, double* value_sum) {
  std::vector<Index> f(static_cast<std::size_t>(d.rows()));
  double acc = 0.0;
  for (Index i = 0; i < d.rows(); ++i) {
    Index best = 0;
    double best_d = d(i, 0);
    for (Index m = 1; m < d.cols(); ++m)
      if (d(i, m) < best_d) {
        best_d = d(i, m);
        best = m;
      }
    f[static_cast<std::size_t>(i)] = best;
    acc += best_d;
  }
  if (value_sum) *value_sum = acc;
  return f;
}

struct CycleOut {
  std::vector<Index> f;
  double criterion = 0.0;
  Eigen::MatrixXd mix;  // mixing matrix behind this cycle's prototypes
};

// One epoch at fixed radius: representation (implicit in mix), weighting for
// adaptive schemes, assignment, criterion. weights is updated in place.
CycleOut run_cycle(const Engine& e, const Eigen::MatrixXd& kmat,
                   const std::vector<Index>& f_in, Scheme scheme,
                   WeightMatrix& weights, bool* degenerate) {
  Eigen::MatrixXd wk(e.n, e.m);
  for (Index i = 0; i < e.n; ++i)
    wk.row(i) = kmat.row(f_in[static_cast<std::size_t>(i)]);
  const Eigen::RowVectorXd mass = wk.colwise().sum();
  if (!mass.allFinite() || !(mass.minCoeff() > 0.0))
    throw_error(ErrorCode::ZeroKernelMass,
                "a neuron received no kernel mass (radius too small)");

  CycleOut out;
  out.mix = wk * mass.cwiseInverse().asDiagonal();
  const DistTables tables = component_tables(e, out.mix);

  if (scheme != Scheme::None) {
    Eigen::MatrixXd pool_m(e.m, e.p), pool_v(e.m, e.p);
    for (Index j = 0; j < e.p; ++j) {
      pool_m.col(j) = (wk.array() * tables.d_mean[static_cast<std::size_t>(j)].array())
                          .colwise()
                          .sum()
                          .matrix()
                          .transpose();
      pool_v.col(j) = (wk.array() * tables.d_disp[static_cast<std::size_t>(j)].array())
                          .colwise()
                          .sum()
                          .matrix()
                          .transpose();
    }
    if (!scheme_is_cluster(scheme)) {
      pool_m = pool_m.colwise().sum().eval();
      pool_v = pool_v.colwise().sum().eval();
    }
    weights = weights_from_pools(scheme, pool_m, pool_v, degenerate);
  }

  const Eigen::MatrixXd smoothed = combine_tables(e, tables, weights) * kmat;
  out.f = argmin_rows(smoothed, &out.criterion);
  return out;
}

Prototypes materialize(const Engine& e, const Eigen::MatrixXd& mix) {
  Prototypes out;
  out.neurons = e.m;
  out.variables = e.p;
  out.cells.reserve(static_cast<std::size_t>(e.m * e.p));
  std::vector<Eigen::MatrixXd> proto_vals;
  proto_vals.reserve(e.columns.size());
  for (const ColumnCache& c : e.columns)
    proto_vals.push_back(mix.transpose() * c.vals);
  for (Index m = 0; m < e.m; ++m)
    for (Index j = 0; j < e.p; ++j)
      out.cells.emplace_back(
          e.columns[static_cast<std::size_t>(j)].grid,
          Eigen::VectorXd(
              proto_vals[static_cast<std::size_t>(j)].row(m).transpose()));
  return out;
}

KernelParams resolve_radii(const MapGrid& grid, const TrainConfig& config) {
  KernelParams radii = default_radii(grid);
  if (config.t_max > 0.0) radii.t_max = config.t_max;
  if (config.t_min > 0.0) radii.t_min = config.t_min;
  if (!(radii.t_min > 0.0) || !(radii.t_max > 0.0))
    throw_error(ErrorCode::NonPositiveRadius, "radii must be > 0");
  if (radii.t_min > radii.t_max)
    throw_error(ErrorCode::InvariantViolation, "t_min must not exceed t_max");
  return radii;
}

TrainedMap train_engine(const Engine& e, const MapGrid& grid,
                        const TrainConfig& config, std::uint64_t seed,
                        int restart_index, const EpochObserver& observer) {
  if (config.algorithm == Algorithm::Adbsom && config.scheme == Scheme::None)
    throw_error(ErrorCode::SchemeMismatch, "adbsom needs a weighting scheme");
  if (config.algorithm == Algorithm::Dbsom && config.scheme != Scheme::None)
    throw_error(ErrorCode::SchemeMismatch, "dbsom does not take a scheme");
  if (config.n_iter < 1)
    throw_error(ErrorCode::InvariantViolation, "n_iter must be >= 1");
  if (config.max_final_cycles < 1)
    throw_error(ErrorCode::InvariantViolation, "max_final_cycles must be >= 1");
  if (e.m > e.n)
    throw_error(ErrorCode::TooManyNeurons,
                "more neurons than objects to draw prototypes from");
  const KernelParams radii = resolve_radii(grid, config);
  const Scheme scheme =
      config.algorithm == Algorithm::Adbsom ? config.scheme : Scheme::None;

  // Draw M distinct objects as initial prototypes (partial Fisher-Yates).
  Rng rng(seed);
  std::vector<Index> pool(static_cast<std::size_t>(e.n));
  for (Index i = 0; i < e.n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Index k = 0; k < e.m; ++k) {
    const auto r = k + static_cast<Index>(rng.uniform_index(
                           static_cast<std::uint64_t>(e.n - k)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(r)]);
  }

  TrainedMap map{grid, {}, WeightMatrix::unit(e.p), {}, {}, 0, false, false,
                 config, radii, seed, restart_index};

  // Initial partition against the sampled prototypes at T = t_max.
  Eigen::MatrixXd kmat = grid.kernel_matrix(radii.t_max);
  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(e.n, e.m);
  for (Index k = 0; k < e.m; ++k) mix(pool[static_cast<std::size_t>(k)], k) = 1.0;
  std::vector<Index> f = argmin_rows(
      combine_tables(e, component_tables(e, mix), map.weights) * kmat, nullptr);

  const Index n_iter = config.n_iter;
  for (Index t = 0; t < n_iter; ++t) {
    const double radius = radius_schedule(t, n_iter, radii);
    if (t > 0 || radius != radii.t_max) kmat = grid.kernel_matrix(radius);
    CycleOut cycle = run_cycle(e, kmat, f, scheme, map.weights,
                               &map.degenerate_dispersion);
    f = std::move(cycle.f);
    mix = std::move(cycle.mix);
    map.criterion_history.push_back(cycle.criterion);
    if (observer)
      observer(EpochState{static_cast<int>(t), radius, cycle.criterion, false,
                          map.weights, f});
  }

  map.final_loop_start = static_cast<Index>(map.criterion_history.size());
  kmat = grid.kernel_matrix(radii.t_min);
  for (int cycle_idx = 0; cycle_idx < config.max_final_cycles; ++cycle_idx) {
    CycleOut cycle = run_cycle(e, kmat, f, scheme, map.weights,
                               &map.degenerate_dispersion);
    mix = std::move(cycle.mix);
    map.criterion_history.push_back(cycle.criterion);
    const bool stable = (cycle.f == f);
    f = std::move(cycle.f);
    if (observer)
      observer(EpochState{static_cast<int>(n_iter) + cycle_idx, radii.t_min,
                          cycle.criterion, true, map.weights, f});
    if (stable) {
      map.converged = true;
      break;
    }
  }

  map.assignment = std::move(f);
  map.prototypes = materialize(e, mix);
  return map;
}

}  // namespace

TrainedMap train(const DistributionalTable& table, const MapGrid& grid,
                 const TrainConfig& config, const EpochObserver& observer) {
  table.validate();
  Engine engine;
  if (config.standardize) {
    engine.build(standardize(table), grid);
  } else {
    engine.build(table, grid);
  }
  return train_engine(engine, grid, config, config.seed, 0, observer);
}

TrainedMap multi_restart(const DistributionalTable& table, const MapGrid& grid,
                         const TrainConfig& config, int restarts) {
  if (restarts < 1)
    throw_error(ErrorCode::InvariantViolation, "restarts must be >= 1");
  table.validate();
  Engine engine;
  if (config.standardize) {
    engine.build(standardize(table), grid);
  } else {
    engine.build(table, grid);
  }
  TrainedMap best = train_engine(engine, grid, config,
                                 mix_seed(config.seed, 0), 0, {});
  for (int r = 1; r < restarts; ++r) {
    TrainedMap candidate = train_engine(engine, grid, config,
                                        mix_seed(config.seed, static_cast<std::uint64_t>(r)),
                                        r, {});
    if (candidate.final_criterion() < best.final_criterion())
      best = std::move(candidate);
  }
  return best;
}

}  // namespace dbsom
