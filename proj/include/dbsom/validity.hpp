#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbsom/som.hpp"

namespace dbsom {

// Share of objects whose best and second-best neurons (by the generalized
// distance at radius T, ties to the lowest index) are not grid neighbours.
double topographic_error(const DistributionalTable& table,
                         const Prototypes& prototypes,
                         const WeightMatrix& weights, const MapGrid& grid,
                         double T);

// Naive silhouette over a precomputed dissimilarity table. distances(i, k)
// is the squared distance of object i to object k measured in k's cluster
// (plain squared Wasserstein gives a symmetric table). Singletons score 0;
// the mean runs over all objects. Needs at least two non-empty clusters.
double silhouette(const Eigen::MatrixXd& distances,
                  std::span<const Index> assignment);

// Same index through the closed forms
//   a(i) = (n_A d2(y_i, bar_A) + SSE_A) / (n_A - 1)
//   b(i) = min_B d2(y_i, bar_B) + SSE_B / n_B
// which need one barycenter and one pass per cluster instead of all pairs.
// Optional weights evaluate each cluster under its own adaptive metric.
double silhouette_fast(const DistributionalTable& table,
                       std::span<const Index> assignment,
                       const WeightMatrix* weights = nullptr);

// silhouette_fast with b(i) restricted to clusters whose neurons are not
// adjacent to the object's BMU. Objects with no eligible cluster are skipped
// (counted in *skipped); the index is 0 when every object is skipped.
double silhouette_topo(const DistributionalTable& table,
                       std::span<const Index> assignment, const MapGrid& grid,
                       const WeightMatrix* weights = nullptr,
                       Index* skipped = nullptr);

// Simplified silhouette: a(i) and b(i) are distances to cluster prototypes
// rather than averages over members.
double silhouette_simplified(const DistributionalTable& table,
                             std::span<const Index> assignment,
                             const Prototypes& prototypes,
                             const WeightMatrix* weights = nullptr);

// Simplified silhouette with the non-adjacent restriction on b(i).
double silhouette_simplified_topo(const DistributionalTable& table,
                                  std::span<const Index> assignment,
                                  const Prototypes& prototypes,
                                  const MapGrid& grid,
                                  const WeightMatrix* weights = nullptr,
                                  Index* skipped = nullptr);

// External indexes between two flat partitions (cluster ids need not be
// contiguous). ari uses exact integer pair counts; nmi uses natural-log
// mutual information normalized by the mean entropy (0 with *degenerate set
// when both partitions are single-block); purity averages the majority
// class share per cluster.
double ari(std::span<const Index> a, std::span<const Index> b);
double nmi(std::span<const Index> a, std::span<const Index> b,
           bool* degenerate = nullptr);
double purity(std::span<const Index> clusters, std::span<const Index> classes);

// 0-based ids in first-appearance order.
std::vector<Index> encode_labels(const std::vector<std::string>& labels);

struct IndexReport {
  double topographic_error = 0.0;
  double silhouette = 0.0;
  double silhouette_topo = 0.0;
  double silhouette_simplified = 0.0;
  double silhouette_simplified_topo = 0.0;
  Index topo_skipped = 0;
  Index simplified_topo_skipped = 0;
  std::optional<double> ari;
  std::optional<double> nmi;
  std::optional<double> purity;
  bool degenerate_entropy = false;
};

// All internal indexes of a trained map at its final radius (adaptive maps
// evaluate the topology-aware silhouettes under their trained weights), plus
// the external indexes when the table carries labels.
IndexReport evaluate_map(const DistributionalTable& table,
                         const TrainedMap& map);

}  // namespace dbsom
