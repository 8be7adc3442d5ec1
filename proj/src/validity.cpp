#include "dbsom/validity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace dbsom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_partition_sizes(std::span<const Index> a, std::span<const Index> b) {
  if (a.size() != b.size())
    throw_error(ErrorCode::LengthMismatch,
                "partitions must cover the same objects");
  if (a.empty())
    throw_error(ErrorCode::EmptySample, "partitions must be non-empty");
}

// Non-empty cluster ids in ascending order plus a dense position lookup.
struct ClusterIndex {
  std::vector<Index> ids;
  std::unordered_map<Index, Index> pos;
  std::vector<Index> size;

  explicit ClusterIndex(std::span<const Index> assignment) {
    std::map<Index, Index> counts;
    for (Index c : assignment) counts[c]++;
    for (const auto& [id, n] : counts) {
      pos.emplace(id, static_cast<Index>(ids.size()));
      ids.push_back(id);
      size.push_back(n);
    }
  }

  Index count() const { return static_cast<Index>(ids.size()); }
};

// Weighted distance of precomputed (mean, dispersion) component pairs under
// the metric of cluster `neuron` (unit weights when weights is null).
double combine(const WeightMatrix* weights, Index neuron,
               std::span<const double> dm, std::span<const double> dv) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dm.size(); ++j) {
    const double wm = weights ? weights->mean_weight(neuron, static_cast<Index>(j)) : 1.0;
    const double wv = weights ? weights->disp_weight(neuron, static_cast<Index>(j)) : 1.0;
    acc += wm * dm[j] + wv * dv[j];
  }
  return acc;
}

double silhouette_value(double a, double b) {
  const double m = std::max(a, b);
  if (!(m > 0.0)) return 0.0;
  return (b - a) / m;
}

// Member-averaged silhouette family via the closed forms. When grid is
// non-null, b(i) only scans clusters not adjacent to the object's own neuron
// and objects with no candidate are skipped.
double member_silhouette(const DistributionalTable& table,
                         std::span<const Index> assignment,
                         const MapGrid* grid, const WeightMatrix* weights,
                         Index* skipped_out) {
  table.validate();
  const Index n = table.n_objects();
  const Index p = table.n_variables();
  if (static_cast<Index>(assignment.size()) != n)
    throw_error(ErrorCode::DimensionMismatch, "one cluster id per object");
  ClusterIndex clusters(assignment);
  const Index nc = clusters.count();
  if (nc < 2)
    throw_error(ErrorCode::SingleCluster,
                "silhouette needs at least two non-empty clusters");

  // Component tables: distance of every object to every cluster barycenter,
  // and per-cluster squared-error sums, all split by (variable, component).
  std::vector<double> dm(static_cast<std::size_t>(n * nc * p));
  std::vector<double> dv(static_cast<std::size_t>(n * nc * p));
  std::vector<double> sse_m(static_cast<std::size_t>(nc * p), 0.0);
  std::vector<double> sse_v(static_cast<std::size_t>(nc * p), 0.0);
  std::vector<QuantileFunction> members;
  for (Index c = 0; c < nc; ++c) {
    for (Index j = 0; j < p; ++j) {
      members.clear();
      for (Index i = 0; i < n; ++i)
        if (assignment[static_cast<std::size_t>(i)] == clusters.ids[static_cast<std::size_t>(c)])
          members.push_back(table.at(i, j));
      const QuantileFunction bar = weighted_barycenter(
          members, Eigen::VectorXd::Ones(static_cast<Index>(members.size())));
      for (Index i = 0; i < n; ++i) {
        const DistanceComponents parts = decompose(table.at(i, j), bar);
        const auto at = static_cast<std::size_t>((i * nc + c) * p + j);
        dm[at] = parts.mean_sq;
        dv[at] = parts.disp_sq;
        if (assignment[static_cast<std::size_t>(i)] ==
            clusters.ids[static_cast<std::size_t>(c)]) {
          sse_m[static_cast<std::size_t>(c * p + j)] += parts.mean_sq;
          sse_v[static_cast<std::size_t>(c * p + j)] += parts.disp_sq;
        }
      }
    }
  }

  auto span_at = [&](const std::vector<double>& v, Index i, Index c) {
    return std::span<const double>(v.data() + (i * nc + c) * p,
                                   static_cast<std::size_t>(p));
  };
  auto sse_at = [&](const std::vector<double>& v, Index c) {
    return std::span<const double>(v.data() + c * p, static_cast<std::size_t>(p));
  };

  double total = 0.0;
  Index counted = 0;
  Index skipped = 0;
  for (Index i = 0; i < n; ++i) {
    const Index own_id = assignment[static_cast<std::size_t>(i)];
    const Index own = clusters.pos.at(own_id);
    const Index n_own = clusters.size[static_cast<std::size_t>(own)];
    if (n_own < 2) {
      // a(i) undefined for singletons; scored 0 by convention.
      counted++;
      continue;
    }
    double b = kInf;
    for (Index c = 0; c < nc; ++c) {
      const Index cid = clusters.ids[static_cast<std::size_t>(c)];
      if (cid == own_id) continue;
      if (grid && grid->adjacent(own_id, cid)) continue;
      const double d =
          combine(weights, cid, span_at(dm, i, c), span_at(dv, i, c)) +
          combine(weights, cid, sse_at(sse_m, c), sse_at(sse_v, c)) /
              static_cast<double>(clusters.size[static_cast<std::size_t>(c)]);
      b = std::min(b, d);
    }
    if (b == kInf) {
      skipped++;
      continue;
    }
    const double a =
        (static_cast<double>(n_own) *
             combine(weights, own_id, span_at(dm, i, own), span_at(dv, i, own)) +
         combine(weights, own_id, sse_at(sse_m, own), sse_at(sse_v, own))) /
        static_cast<double>(n_own - 1);
    total += silhouette_value(a, b);
    counted++;
  }
  if (skipped_out) *skipped_out = skipped;
  return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

// Prototype-based silhouette family.
double prototype_silhouette(const DistributionalTable& table,
                            std::span<const Index> assignment,
                            const Prototypes& prototypes, const MapGrid* grid,
                            const WeightMatrix* weights, Index* skipped_out) {
  table.validate();
  const Index n = table.n_objects();
  const Index p = table.n_variables();
  if (static_cast<Index>(assignment.size()) != n)
    throw_error(ErrorCode::DimensionMismatch, "one cluster id per object");
  if (prototypes.variables != p)
    throw_error(ErrorCode::DimensionMismatch,
                "prototypes must cover the table's variables");
  ClusterIndex clusters(assignment);
  const Index nc = clusters.count();
  if (nc < 2)
    throw_error(ErrorCode::SingleCluster,
                "silhouette needs at least two non-empty clusters");
  for (Index id : clusters.ids)
    if (id < 0 || id >= prototypes.neurons)
      throw_error(ErrorCode::IndexOutOfRange,
                  "cluster id outside the prototype rows");

  std::vector<double> dm(static_cast<std::size_t>(p));
  std::vector<double> dv(static_cast<std::size_t>(p));
  double total = 0.0;
  Index counted = 0;
  Index skipped = 0;
  for (Index i = 0; i < n; ++i) {
    const Index own_id = assignment[static_cast<std::size_t>(i)];
    double a = 0.0;
    double b = kInf;
    for (Index c = 0; c < nc; ++c) {
      const Index cid = clusters.ids[static_cast<std::size_t>(c)];
      for (Index j = 0; j < p; ++j) {
        const DistanceComponents parts =
            decompose(table.at(i, j), prototypes.at(cid, j));
        dm[static_cast<std::size_t>(j)] = parts.mean_sq;
        dv[static_cast<std::size_t>(j)] = parts.disp_sq;
      }
      const double d = combine(weights, cid, dm, dv);
      if (cid == own_id) {
        a = d;
      } else if (!grid || !grid->adjacent(own_id, cid)) {
        b = std::min(b, d);
      }
    }
    if (b == kInf) {
      skipped++;
      continue;
    }
    total += silhouette_value(a, b);
    counted++;
  }
  if (skipped_out) *skipped_out = skipped;
  return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace

double topographic_error(const DistributionalTable& table,
                         const Prototypes& prototypes,
                         const WeightMatrix& weights, const MapGrid& grid,
                         double T) {
  table.validate();
  if (prototypes.neurons != grid.size() ||
      prototypes.variables != table.n_variables())
    throw_error(ErrorCode::DimensionMismatch,
                "prototypes must be neurons x variables");
  if (grid.size() < 2)
    throw_error(ErrorCode::SingleCluster, "need at least two neurons");
  const Index n = table.n_objects();
  const Index m = grid.size();
  Index mismatches = 0;
  std::vector<double> dist(static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) {
    for (Index r = 0; r < m; ++r)
      dist[static_cast<std::size_t>(r)] =
          generalized_distance(table.row(i), r, prototypes, grid, T, weights);
    Index best = 0;
    for (Index r = 1; r < m; ++r)
      if (dist[static_cast<std::size_t>(r)] < dist[static_cast<std::size_t>(best)])
        best = r;
    Index second = best == 0 ? 1 : 0;
    for (Index r = 0; r < m; ++r)
      if (r != best &&
          dist[static_cast<std::size_t>(r)] < dist[static_cast<std::size_t>(second)])
        second = r;
    if (!grid.adjacent(best, second)) mismatches++;
  }
  return static_cast<double>(mismatches) / static_cast<double>(n);
}

double silhouette(const Eigen::MatrixXd& distances,
                  std::span<const Index> assignment) {
  const Index n = distances.rows();
  if (distances.cols() != n)
    throw_error(ErrorCode::DimensionMismatch, "distance table must be square");
  if (static_cast<Index>(assignment.size()) != n)
    throw_error(ErrorCode::DimensionMismatch, "one cluster id per object");
  ClusterIndex clusters(assignment);
  const Index nc = clusters.count();
  if (nc < 2)
    throw_error(ErrorCode::SingleCluster,
                "silhouette needs at least two non-empty clusters");

  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Index own_id = assignment[static_cast<std::size_t>(i)];
    const Index n_own =
        clusters.size[static_cast<std::size_t>(clusters.pos.at(own_id))];
    if (n_own < 2) continue;  // singleton scores 0
    double a = 0.0;
    std::unordered_map<Index, double> sums;
    for (Index k = 0; k < n; ++k) {
      if (k == i) continue;
      const Index kid = assignment[static_cast<std::size_t>(k)];
      if (kid == own_id)
        a += distances(i, k);
      else
        sums[kid] += distances(i, k);
    }
    a /= static_cast<double>(n_own - 1);
    double b = kInf;
    for (const auto& [cid, sum] : sums)
      b = std::min(b, sum / static_cast<double>(clusters.size[static_cast<std::size_t>(
                            clusters.pos.at(cid))]));
    total += silhouette_value(a, b);
  }
  return total / static_cast<double>(n);
}

double silhouette_fast(const DistributionalTable& table,
                       std::span<const Index> assignment,
                       const WeightMatrix* weights) {
  return member_silhouette(table, assignment, nullptr, weights, nullptr);
}

double silhouette_topo(const DistributionalTable& table,
                       std::span<const Index> assignment, const MapGrid& grid,
                       const WeightMatrix* weights, Index* skipped) {
  return member_silhouette(table, assignment, &grid, weights, skipped);
}

double silhouette_simplified(const DistributionalTable& table,
                             std::span<const Index> assignment,
                             const Prototypes& prototypes,
                             const WeightMatrix* weights) {
  return prototype_silhouette(table, assignment, prototypes, nullptr, weights,
                              nullptr);
}

double silhouette_simplified_topo(const DistributionalTable& table,
                                  std::span<const Index> assignment,
                                  const Prototypes& prototypes,
                                  const MapGrid& grid,
                                  const WeightMatrix* weights, Index* skipped) {
  return prototype_silhouette(table, assignment, prototypes, &grid, weights,
                              skipped);
}

namespace {

struct Contingency {
  std::map<std::pair<Index, Index>, long long> cells;
  std::map<Index, long long> row;
  std::map<Index, long long> col;
  long long n = 0;
};

Contingency cross_tabulate(std::span<const Index> a, std::span<const Index> b) {
  Contingency t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.cells[{a[i], b[i]}]++;
    t.row[a[i]]++;
    t.col[b[i]]++;
  }
  t.n = static_cast<long long>(a.size());
  return t;
}

long long comb2(long long x) { return x * (x - 1) / 2; }

}  // namespace

double ari(std::span<const Index> a, std::span<const Index> b) {
  check_partition_sizes(a, b);
  const Contingency t = cross_tabulate(a, b);
  long long s_cells = 0, s_row = 0, s_col = 0;
  for (const auto& [key, c] : t.cells) s_cells += comb2(c);
  for (const auto& [id, c] : t.row) s_row += comb2(c);
  for (const auto& [id, c] : t.col) s_col += comb2(c);
  const long long pairs = comb2(t.n);
  // Exact integer arithmetic; 128-bit intermediates keep N into the millions.
  const __int128 num =
      2 * (static_cast<__int128>(pairs) * s_cells -
           static_cast<__int128>(s_row) * s_col);
  const __int128 den = static_cast<__int128>(pairs) * (s_row + s_col) -
                       2 * static_cast<__int128>(s_row) * s_col;
  if (den == 0) return 1.0;  // both partitions trivially identical in structure
  return static_cast<double>(num) / static_cast<double>(den);
}

double nmi(std::span<const Index> a, std::span<const Index> b,
           bool* degenerate) {
  check_partition_sizes(a, b);
  const Contingency t = cross_tabulate(a, b);
  const double n = static_cast<double>(t.n);
  double info = 0.0;
  for (const auto& [key, c] : t.cells) {
    const double joint = static_cast<double>(c);
    info += joint / n *
            std::log(n * joint /
                     (static_cast<double>(t.row.at(key.first)) *
                      static_cast<double>(t.col.at(key.second))));
  }
  auto entropy = [&](const std::map<Index, long long>& counts) {
    double h = 0.0;
    for (const auto& [id, c] : counts) {
      const double q = static_cast<double>(c) / n;
      h -= q * std::log(q);
    }
    return h;
  };
  const double ha = entropy(t.row);
  const double hb = entropy(t.col);
  if (ha == 0.0 && hb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return std::max(info, 0.0) / (0.5 * (ha + hb));
}

double purity(std::span<const Index> clusters, std::span<const Index> classes) {
  check_partition_sizes(clusters, classes);
  const Contingency t = cross_tabulate(clusters, classes);
  std::map<Index, long long> best;
  for (const auto& [key, c] : t.cells) {
    auto& slot = best[key.first];
    slot = std::max(slot, c);
  }
  long long hits = 0;
  for (const auto& [id, c] : best) hits += c;
  return static_cast<double>(hits) / static_cast<double>(t.n);
}

std::vector<Index> encode_labels(const std::vector<std::string>& labels) {
  std::unordered_map<std::string, Index> seen;
  std::vector<Index> out;
  out.reserve(labels.size());
  for (const auto& label : labels) {
    auto [it, inserted] =
        seen.emplace(label, static_cast<Index>(seen.size()));
    out.push_back(it->second);
  }
  return out;
}

IndexReport evaluate_map(const DistributionalTable& table,
                         const TrainedMap& map) {
  IndexReport report;
  const double t_eval = map.radii.t_min;
  const WeightMatrix* adaptive =
      map.weights.scheme != Scheme::None ? &map.weights : nullptr;
  report.topographic_error = topographic_error(table, map.prototypes,
                                               map.weights, map.grid, t_eval);
  report.silhouette = silhouette_fast(table, map.assignment);
  report.silhouette_topo = silhouette_topo(table, map.assignment, map.grid,
                                           adaptive, &report.topo_skipped);
  report.silhouette_simplified =
      silhouette_simplified(table, map.assignment, map.prototypes, adaptive);
  report.silhouette_simplified_topo = silhouette_simplified_topo(
      table, map.assignment, map.prototypes, map.grid, adaptive,
      &report.simplified_topo_skipped);
  if (!table.labels.empty()) {
    const std::vector<Index> truth = encode_labels(table.labels);
    report.ari = ari(map.assignment, truth);
    bool degenerate = false;
    report.nmi = nmi(map.assignment, truth, &degenerate);
    report.degenerate_entropy = degenerate;
    report.purity = purity(map.assignment, truth);
  }
  return report;
}

}  // namespace dbsom
