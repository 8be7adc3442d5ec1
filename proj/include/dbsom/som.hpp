#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dbsom/map_grid.hpp"
#include "dbsom/table.hpp"
#include "dbsom/wasserstein.hpp"
#include "dbsom/weights.hpp"

namespace dbsom {

enum class Algorithm { Dbsom, Adbsom };

const char* algorithm_name(Algorithm algorithm);
Algorithm algorithm_from_name(const std::string& name);

struct TrainConfig {
  Algorithm algorithm = Algorithm::Dbsom;
  Scheme scheme = Scheme::None;  // required for Adbsom, None for Dbsom
  int n_iter = 50;
  // Radii <= 0 resolve to default_radii(grid).
  double t_max = 0.0;
  double t_min = 0.0;
  std::uint64_t seed = 0;
  bool standardize = false;
  // Safety cap on the final fixed-radius loop.
  int max_final_cycles = 500;
};

// Snapshot handed to the observer after every epoch (scheduled epochs and
// final-loop cycles alike).
struct EpochState {
  int t;
  double radius;
  double criterion;
  bool final_loop;
  const WeightMatrix& weights;
  const std::vector<Index>& assignment;
};
using EpochObserver = std::function<void(const EpochState&)>;

struct TrainedMap {
  MapGrid grid;
  Prototypes prototypes;
  WeightMatrix weights;  // unit matrix for Dbsom
  std::vector<Index> assignment;
  // One entry per epoch: the n_iter scheduled epochs, then one per
  // final-loop cycle starting at final_loop_start.
  std::vector<double> criterion_history;
  Index final_loop_start = 0;
  bool converged = false;
  // Set when a weighting-step dispersion pool had to be clamped.
  bool degenerate_dispersion = false;
  TrainConfig config;
  KernelParams radii;
  std::uint64_t seed_used = 0;
  int restart_index = 0;

  double final_criterion() const { return criterion_history.back(); }
  std::vector<Index> neuron_counts() const;
};

// The value being minimized: sum over objects of the generalized distance to
// their assigned neuron at radius T.
double criterion(const DistributionalTable& table, const Prototypes& prototypes,
                 const WeightMatrix& weights,
                 std::span<const Index> assignment, const MapGrid& grid,
                 double T);

// Optimal prototype for (neuron, variable) at fixed assignment: the
// kernel-weighted barycenter of the column, weights K(d(bmu_i, neuron), T).
QuantileFunction representation_step(const DistributionalTable& table,
                                     std::span<const Index> assignment,
                                     const MapGrid& grid, double T,
                                     Index neuron, Index variable);

Prototypes representation_all(const DistributionalTable& table,
                              std::span<const Index> assignment,
                              const MapGrid& grid, double T);

// Optimal relevance weights for the scheme at fixed prototypes and
// assignment: each weight is the geometric mean of the kernel-weighted
// dispersion pools in its constraint group divided by its own pool. Pools
// below 1e-12 of their total are clamped (sets *degenerate).
WeightMatrix weighting_step(const DistributionalTable& table,
                            const Prototypes& prototypes,
                            std::span<const Index> assignment,
                            const MapGrid& grid, double T, Scheme scheme,
                            bool* degenerate = nullptr);

// Optimal assignment at fixed prototypes and weights: the neuron minimizing
// the generalized distance, ties to the lowest index.
std::vector<Index> assignment_step(const DistributionalTable& table,
                                   const Prototypes& prototypes,
                                   const WeightMatrix& weights,
                                   const MapGrid& grid, double T);

// Batch training: prototypes initialized from distinct random objects, one
// epoch (representation, weighting for Adbsom, assignment) per scheduled
// radius, then a fixed-radius loop at t_min until the partition stabilizes.
TrainedMap train(const DistributionalTable& table, const MapGrid& grid,
                 const TrainConfig& config, const EpochObserver& observer = {});

// Independent restarts with seeds derived from config.seed; returns the map
// with the lowest final criterion (ties to the lowest restart index).
TrainedMap multi_restart(const DistributionalTable& table, const MapGrid& grid,
                         const TrainConfig& config, int restarts);

}  // namespace dbsom
