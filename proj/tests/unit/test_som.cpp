#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "../common/gen.hpp"
#include "dbsom/som.hpp"

using namespace dbsom;

namespace {

// Definition-based dispersion pool: kernel-weighted squared distance mass of
// component (j, part) at neuron m, accumulated object by object.
struct Pools {
  Eigen::MatrixXd mean;  // M x P
  Eigen::MatrixXd disp;
};

Pools brute_pools(const DistributionalTable& table, const Prototypes& protos,
                  std::span<const Index> assignment, const MapGrid& grid,
                  double T) {
  const Index m_count = grid.size();
  const Index p = table.n_variables();
  Pools pools{Eigen::MatrixXd::Zero(m_count, p),
              Eigen::MatrixXd::Zero(m_count, p)};
  for (Index i = 0; i < table.n_objects(); ++i) {
    for (Index m = 0; m < m_count; ++m) {
      const double k = kernel(grid.distance(assignment[static_cast<std::size_t>(i)], m), T);
      for (Index j = 0; j < p; ++j) {
        const DistanceComponents parts = decompose(table.at(i, j), protos.at(m, j));
        pools.mean(m, j) += k * parts.mean_sq;
        pools.disp(m, j) += k * parts.disp_sq;
      }
    }
  }
  return pools;
}

// Reference weights built directly from the constraint-group definition:
// every weight is the geometric mean of its group's pools over its own pool.
WeightMatrix brute_weights(const Pools& pools, Scheme scheme) {
  const Index m_count = pools.mean.rows();
  const Index p = pools.mean.cols();
  WeightMatrix w;
  w.scheme = scheme;
  const bool cluster = scheme_is_cluster(scheme);
  const bool component = scheme_is_component(scheme);
  const Index rows = cluster ? m_count : 1;
  w.values.resize(rows, component ? 2 * p : p);
  for (Index r = 0; r < rows; ++r) {
    std::vector<double> group;
    for (Index j = 0; j < p; ++j) {
      const double mass_m = cluster ? pools.mean(r, j) : pools.mean.col(j).sum();
      const double mass_v = cluster ? pools.disp(r, j) : pools.disp.col(j).sum();
      if (component) {
        group.push_back(mass_m);
        group.push_back(mass_v);
      } else {
        group.push_back(mass_m + mass_v);
      }
    }
    double log_gm = 0.0;
    for (double g : group) log_gm += std::log(g);
    log_gm /= static_cast<double>(group.size());
    for (Index j = 0; j < p; ++j) {
      if (component) {
        w.values(r, j) = std::exp(log_gm - std::log(group[static_cast<std::size_t>(2 * j)]));
        w.values(r, p + j) =
            std::exp(log_gm - std::log(group[static_cast<std::size_t>(2 * j + 1)]));
      } else {
        w.values(r, j) = std::exp(log_gm - std::log(group[static_cast<std::size_t>(j)]));
      }
    }
  }
  return w;
}

double naive_criterion(const DistributionalTable& table, const Prototypes& protos,
                       const WeightMatrix& weights,
                       std::span<const Index> assignment, const MapGrid& grid,
                       double T) {
  double total = 0.0;
  for (Index i = 0; i < table.n_objects(); ++i)
    total += generalized_distance(table.row(i), assignment[static_cast<std::size_t>(i)],
                                  protos, grid, T, weights);
  return total;
}

std::vector<Index> spread_assignment(Rng& rng, Index n, Index m) {
  // every neuron gets at least one object so no pool collapses
  std::vector<Index> a = testgen::random_partition(rng, n, m);
  return a;
}

}  // namespace

TEST_CASE("algorithm names round-trip") {
  CHECK(algorithm_from_name("dbsom") == Algorithm::Dbsom);
  CHECK(algorithm_from_name("adbsom") == Algorithm::Adbsom);
  CHECK(algorithm_from_name(algorithm_name(Algorithm::Adbsom)) == Algorithm::Adbsom);
  CHECK_THROWS_AS(algorithm_from_name("som"), Error);
}

TEST_CASE("criterion equals the sum of generalized distances") {
  Rng rng(301);
  const DistributionalTable table = testgen::random_table(rng, 10, 2);
  const MapGrid grid(2, 3, Topology::Planar);
  std::vector<Index> assignment = spread_assignment(rng, 10, 6);
  const Prototypes protos = representation_all(table, assignment, grid, 0.7);
  const WeightMatrix unit = WeightMatrix::unit(2);
  CHECK(criterion(table, protos, unit, assignment, grid, 0.7) ==
        doctest::Approx(naive_criterion(table, protos, unit, assignment, grid, 0.7))
            .epsilon(1e-10));
}

TEST_CASE("prototype step returns the kernel-weighted barycenter") {
  // two point masses both assigned to neuron 0: the neuron-0 prototype is
  // the kernel-mass weighted average
  DistributionalTable table;
  table.objects = {"a", "b"};
  table.variables = {"v"};
  table.cells = {QuantileFunction::dirac(0), QuantileFunction::dirac(2)};
  const MapGrid grid(2, 2, Topology::Planar);
  std::vector<Index> assignment{0, 0};
  const QuantileFunction g0 = representation_step(table, assignment, grid, 0.5, 0, 0);
  CHECK(g0(0.5) == doctest::Approx(1.0).epsilon(1e-12));

  // weights 3 and 1 via assignments at different distances collapse in the
  // tiny-radius limit to the dominant object
  std::vector<Index> split{0, 3};
  const QuantileFunction far = representation_step(table, split, grid, 0.05, 0, 0);
  CHECK(far(0.5) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("prototype step minimizes the criterion at fixed assignment") {
  Rng rng(302);
  const DistributionalTable table = testgen::random_table(rng, 12, 2);
  const MapGrid grid(2, 2, Topology::Planar);
  const std::vector<Index> assignment = spread_assignment(rng, 12, 4);
  const double T = 0.8;
  const Prototypes protos = representation_all(table, assignment, grid, T);
  const WeightMatrix unit = WeightMatrix::unit(2);
  const double best = criterion(table, protos, unit, assignment, grid, T);
  for (int trial = 0; trial < 12; ++trial) {
    Prototypes moved = protos;
    const Index m = static_cast<Index>(rng.uniform_index(4));
    const Index j = static_cast<Index>(rng.uniform_index(2));
    const QuantileFunction& cur = moved.at(m, j);
    moved.cells[static_cast<std::size_t>(m * 2 + j)] = QuantileFunction(
        cur.probs(), (cur.values().array() + rng.uniform(-0.5, 0.5)).matrix());
    CHECK(criterion(table, moved, unit, assignment, grid, T) >= best - 1e-9);
  }
}

TEST_CASE("weighting step matches the definition for every scheme") {
  Rng rng(303);
  const DistributionalTable table = testgen::random_table(rng, 14, 3);
  const MapGrid grid(2, 2, Topology::Planar);
  const std::vector<Index> assignment = spread_assignment(rng, 14, 4);
  const double T = 0.9;
  const Prototypes protos = representation_all(table, assignment, grid, T);
  const Pools pools = brute_pools(table, protos, assignment, grid, T);
  for (Scheme scheme : {Scheme::GlobalVariable, Scheme::GlobalComponent,
                        Scheme::ClusterVariable, Scheme::ClusterComponent}) {
    CAPTURE(scheme_name(scheme));
    bool degenerate = false;
    const WeightMatrix got =
        weighting_step(table, protos, assignment, grid, T, scheme, &degenerate);
    CHECK_FALSE(degenerate);
    const WeightMatrix want = brute_weights(pools, scheme);
    REQUIRE(got.values.rows() == want.values.rows());
    REQUIRE(got.values.cols() == want.values.cols());
    CHECK((got.values - want.values).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(got.max_product_residual() <= 1e-9);
    CHECK_NOTHROW(got.validate(grid.size(), table.n_variables()));
  }
}

TEST_CASE("weighting step solves a hand-checkable pooled case") {
  // both objects on neuron 0 of a near-degenerate-kernel grid; variable
  // pools are 8 and 2, so the optimal weights are (0.5, 2)
  DistributionalTable table;
  table.objects = {"a", "b"};
  table.variables = {"x", "y"};
  table.cells = {QuantileFunction::dirac(0), QuantileFunction::dirac(0),
                 QuantileFunction::dirac(4), QuantileFunction::dirac(2)};
  const MapGrid grid(2, 2, Topology::Planar);
  const std::vector<Index> assignment{0, 0};
  const double T = 0.05;  // off-diagonal kernels are ~exp(-200)
  bool degenerate = false;
  const WeightMatrix w = weighting_step(table, representation_all(table, assignment, grid, T),
                                        assignment, grid, T, Scheme::GlobalVariable,
                                        &degenerate);
  CHECK(w.values(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(w.values(0, 1) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("weighting step improves or preserves the criterion") {
  Rng rng(304);
  const DistributionalTable table = testgen::random_table(rng, 16, 3);
  const MapGrid grid(2, 2, Topology::Planar);
  const std::vector<Index> assignment = spread_assignment(rng, 16, 4);
  const double T = 0.7;
  const Prototypes protos = representation_all(table, assignment, grid, T);
  for (Scheme scheme : {Scheme::GlobalVariable, Scheme::GlobalComponent,
                        Scheme::ClusterVariable, Scheme::ClusterComponent}) {
    const WeightMatrix opt =
        weighting_step(table, protos, assignment, grid, T, scheme);
    const double best = criterion(table, protos, opt, assignment, grid, T);
    // random product-1 alternatives in the same scheme must not beat it
    for (int trial = 0; trial < 8; ++trial) {
      WeightMatrix rival = opt;
      for (Index r = 0; r < rival.values.rows(); ++r) {
        double log_sum = 0.0;
        for (Index c = 0; c < rival.values.cols(); ++c) {
          rival.values(r, c) = std::exp(rng.uniform(-1.0, 1.0));
          log_sum += std::log(rival.values(r, c));
        }
        const double fix = std::exp(log_sum / static_cast<double>(rival.values.cols()));
        for (Index c = 0; c < rival.values.cols(); ++c) rival.values(r, c) /= fix;
      }
      CHECK(criterion(table, protos, rival, assignment, grid, T) >= best - 1e-9);
    }
  }
}

TEST_CASE("assignment step picks the nearest neuron with ties to the lowest index") {
  Rng rng(305);
  const DistributionalTable table = testgen::random_table(rng, 12, 2);
  const MapGrid grid(2, 3, Topology::Planar);
  const std::vector<Index> seed_assign = spread_assignment(rng, 12, 6);
  const double T = 0.6;
  const Prototypes protos = representation_all(table, seed_assign, grid, T);
  const WeightMatrix unit = WeightMatrix::unit(2);
  const std::vector<Index> got = assignment_step(table, protos, unit, grid, T);
  for (Index i = 0; i < table.n_objects(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = -1;
    for (Index m = 0; m < grid.size(); ++m) {
      const double d = generalized_distance(table.row(i), m, protos, grid, T, unit);
      if (d < best - 1e-15) {
        best = d;
        arg = m;
      }
    }
    CHECK(got[static_cast<std::size_t>(i)] == arg);
  }

  // exact ties go to the lowest neuron index: with identical objects and
  // identical prototypes every generalized distance is exactly zero
  DistributionalTable same;
  same.variables = {"v", "w"};
  for (int i = 0; i < 5; ++i) {
    same.objects.push_back("s" + std::to_string(i));
    same.cells.push_back(QuantileFunction::dirac(0));
    same.cells.push_back(QuantileFunction::dirac(0));
  }
  Prototypes flat = protos;
  for (auto& cell : flat.cells) cell = QuantileFunction::dirac(0);
  const std::vector<Index> tied = assignment_step(same, flat, unit, grid, T);
  for (Index i : tied) CHECK(i == 0);
}

TEST_CASE("one cold epoch on distinct objects lands every object on its own neuron") {
  Rng rng(306);
  DistributionalTable table;
  table.variables = {"v"};
  for (int i = 0; i < 8; ++i) {
    table.objects.push_back("o" + std::to_string(i));
    table.cells.push_back(QuantileFunction::dirac(10.0 * i));
  }
  const MapGrid grid(2, 4, Topology::Planar);
  TrainConfig config;
  config.n_iter = 1;
  config.t_max = 0.05;
  config.t_min = 0.02;
  config.seed = 7;
  const TrainedMap map = train(table, grid, config);
  CHECK(map.final_criterion() <= 1e-6);
  std::vector<Index> sorted = map.assignment;
  std::sort(sorted.begin(), sorted.end());
  for (Index m = 0; m < 8; ++m) CHECK(sorted[static_cast<std::size_t>(m)] == m);
  CHECK(map.converged);
}

TEST_CASE("training is deterministic in the seed") {
  Rng rng(307);
  const DistributionalTable table = testgen::random_table(rng, 20, 2);
  const MapGrid grid(2, 4, Topology::Planar);
  TrainConfig config;
  config.algorithm = Algorithm::Adbsom;
  config.scheme = Scheme::GlobalVariable;
  config.n_iter = 8;
  config.seed = 99;
  const TrainedMap a = train(table, grid, config);
  const TrainedMap b = train(table, grid, config);
  CHECK(a.assignment == b.assignment);
  CHECK(a.criterion_history == b.criterion_history);
  CHECK(a.weights.values == b.weights.values);

  config.seed = 100;
  const TrainedMap c = train(table, grid, config);
  CHECK(c.criterion_history.size() >= 1);  // different seed still trains
}

TEST_CASE("the fixed-radius loop never increases the criterion and stops stable") {
  Rng rng(308);
  for (int trial = 0; trial < 5; ++trial) {
    const DistributionalTable table = testgen::random_table(rng, 25, 2);
    const MapGrid grid(2, 4, Topology::Planar);
    TrainConfig config;
    config.algorithm = trial % 2 == 0 ? Algorithm::Adbsom : Algorithm::Dbsom;
    config.scheme = trial % 2 == 0 ? Scheme::ClusterComponent : Scheme::None;
    config.n_iter = 6;
    config.seed = static_cast<std::uint64_t>(400 + trial);
    const TrainedMap map = train(table, grid, config);
    REQUIRE(map.final_loop_start >= 1);
    REQUIRE(static_cast<std::size_t>(map.final_loop_start) <
            map.criterion_history.size() + 1);
    for (std::size_t t = static_cast<std::size_t>(map.final_loop_start);
         t < map.criterion_history.size(); ++t) {
      CHECK(map.criterion_history[t] <= map.criterion_history[t - 1] + 1e-9);
    }
    CHECK(map.converged);
    CHECK(map.weights.max_product_residual() <= 1e-9);
  }
}

TEST_CASE("epoch observer sees the scheduled radii and the final loop") {
  Rng rng(309);
  const DistributionalTable table = testgen::random_table(rng, 15, 2);
  const MapGrid grid(2, 2, Topology::Planar);
  TrainConfig config;
  config.n_iter = 5;
  config.seed = 11;
  const KernelParams radii = default_radii(grid);
  int scheduled = 0;
  int final_cycles = 0;
  double last_radius = -1.0;
  train(table, grid, config, [&](const EpochState& state) {
    if (!state.final_loop) {
      ++scheduled;
      CHECK(state.radius ==
            doctest::Approx(radius_schedule(state.t, config.n_iter, radii))
                .epsilon(1e-12));
    } else {
      ++final_cycles;
      CHECK(state.radius == doctest::Approx(radii.t_min).epsilon(1e-12));
    }
    CHECK(state.weights.values.size() > 0);
    CHECK(state.assignment.size() == 15);
    last_radius = state.radius;
  });
  CHECK(scheduled == 5);
  CHECK(final_cycles >= 1);
  CHECK(last_radius == doctest::Approx(radii.t_min));
}

TEST_CASE("restarts keep the lowest final criterion") {
  Rng rng(310);
  const DistributionalTable table = testgen::random_table(rng, 18, 2);
  const MapGrid grid(2, 2, Topology::Planar);
  TrainConfig config;
  config.n_iter = 6;
  config.seed = 5;
  const TrainedMap best = multi_restart(table, grid, config, 6);
  CHECK(best.restart_index >= 0);
  CHECK(best.restart_index < 6);
  // replaying the winning restart's seed alone reproduces it
  TrainConfig replay = config;
  replay.seed = best.seed_used;
  const TrainedMap solo = train(table, grid, replay);
  CHECK(solo.final_criterion() == doctest::Approx(best.final_criterion()).epsilon(1e-12));
  CHECK(solo.assignment == best.assignment);

  // every restart's criterion is >= the winner's
  for (int r = 0; r < 6; ++r) {
    TrainConfig one = config;
    one.seed = mix_seed(config.seed, static_cast<std::uint64_t>(r));
    const TrainedMap m = train(table, grid, one);
    CHECK(m.final_criterion() >= best.final_criterion() - 1e-12);
  }

  const TrainedMap single = multi_restart(table, grid, config, 1);
  CHECK(single.restart_index == 0);
}

TEST_CASE("adaptive training keeps the product constraint after every epoch") {
  Rng rng(311);
  const DistributionalTable table = testgen::random_table(rng, 20, 3);
  const MapGrid grid(2, 2, Topology::Planar);
  for (Scheme scheme : {Scheme::GlobalVariable, Scheme::GlobalComponent,
                        Scheme::ClusterVariable, Scheme::ClusterComponent}) {
    CAPTURE(scheme_name(scheme));
    TrainConfig config;
    config.algorithm = Algorithm::Adbsom;
    config.scheme = scheme;
    config.n_iter = 5;
    config.seed = 21;
    double worst = 0.0;
    const TrainedMap map = train(table, grid, config, [&](const EpochState& state) {
      worst = std::max(worst, state.weights.max_product_residual());
    });
    CHECK(worst <= 1e-9);
    CHECK(map.weights.scheme == scheme);
  }
}

TEST_CASE("training validates its configuration") {
  Rng rng(312);
  const DistributionalTable table = testgen::random_table(rng, 6, 2);
  const MapGrid grid(2, 2, Topology::Planar);

  TrainConfig bad_iter;
  bad_iter.n_iter = 0;
  CHECK_THROWS_AS(train(table, grid, bad_iter), Error);

  TrainConfig mismatch;
  mismatch.algorithm = Algorithm::Dbsom;
  mismatch.scheme = Scheme::GlobalVariable;
  try {
    train(table, grid, mismatch);
    FAIL_CHECK("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemeMismatch);
  }

  TrainConfig adaptive_none;
  adaptive_none.algorithm = Algorithm::Adbsom;
  adaptive_none.scheme = Scheme::None;
  CHECK_THROWS_AS(train(table, grid, adaptive_none), Error);

  // more neurons than objects cannot seed distinct prototypes
  const DistributionalTable tiny = testgen::random_table(rng, 3, 2);
  TrainConfig config;
  try {
    train(tiny, grid, config);
    FAIL_CHECK("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooManyNeurons);
  }
}
