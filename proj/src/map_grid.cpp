#include "dbsom/map_grid.hpp"

#include <cmath>
#include <limits>

namespace dbsom {

namespace {
constexpr double kRowPitch = 0.8660254037844386;  // sqrt(3)/2
}

const char* topology_name(Topology topo) {
  return topo == Topology::Planar ? "planar" : "toroidal";
}

Topology topology_from_name(const std::string& name) {
  if (name == "planar") return Topology::Planar;
  if (name == "toroidal") return Topology::Toroidal;
  throw_error(ErrorCode::ParseError, "unknown topology '" + name + "'");
}

MapGrid::MapGrid(Index rows, Index cols, Topology topology)
    : rows_(rows), cols_(cols), topology_(topology) {
  if (rows < 2 || cols < 2)
    throw_error(ErrorCode::InvariantViolation,
                "grid needs at least 2 rows and 2 columns");
  if (topology == Topology::Toroidal && (rows % 2 != 0 || cols % 2 != 0))
    throw_error(ErrorCode::ToroidalParity,
                "toroidal grids need even row and column counts");

  const Index m = size();
  coords_.resize(m, 2);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      coords_(r * cols + c, 0) =
          static_cast<double>(c) + (r % 2 == 1 ? 0.5 : 0.0);
      coords_(r * cols + c, 1) = static_cast<double>(r) * kRowPitch;
    }

  dist_.resize(m, m);
  const double px = static_cast<double>(cols);
  const double py = static_cast<double>(rows) * kRowPitch;
  for (Index a = 0; a < m; ++a) {
    dist_(a, a) = 0.0;
    for (Index b = a + 1; b < m; ++b) {
      const double dx = coords_(a, 0) - coords_(b, 0);
      const double dy = coords_(a, 1) - coords_(b, 1);
      double d2;
      if (topology == Topology::Planar) {
        d2 = dx * dx + dy * dy;
      } else {
        d2 = std::numeric_limits<double>::infinity();
        for (int ix = -1; ix <= 1; ++ix)
          for (int iy = -1; iy <= 1; ++iy) {
            const double wx = dx + ix * px;
            const double wy = dy + iy * py;
            d2 = std::min(d2, wx * wx + wy * wy);
          }
      }
      dist_(a, b) = dist_(b, a) = std::sqrt(d2);
    }
  }
}

Eigen::MatrixXd MapGrid::kernel_matrix(double T) const {
  if (!(T > 0.0))
    throw_error(ErrorCode::NonPositiveRadius, "kernel radius must be > 0");
  const double inv = -1.0 / (2.0 * T * T);
  return (dist_.array().square() * inv).exp();
}

double kernel(double dist, double T) {
  if (!(T > 0.0))
    throw_error(ErrorCode::NonPositiveRadius, "kernel radius must be > 0");
  return std::exp(-(dist * dist) / (2.0 * T * T));
}

KernelParams default_radii(const MapGrid& grid) {
  KernelParams params;
  const double half_diameter = 0.5 * grid.diameter();
  // Solve exp(-d^2 / (2 T^2)) = k for T.
  params.t_max =
      std::sqrt(-(half_diameter * half_diameter) / (2.0 * std::log(0.1)));
  params.t_min = std::sqrt(-1.0 / (2.0 * std::log(0.01)));
  return params;
}

double radius_schedule(Index t, Index n_iter, const KernelParams& params) {
  if (!(params.t_min > 0.0) || !(params.t_max > 0.0))
    throw_error(ErrorCode::NonPositiveRadius, "radii must be > 0");
  if (params.t_min > params.t_max)
    throw_error(ErrorCode::InvariantViolation, "t_min must not exceed t_max");
  if (n_iter < 1 || t < 0 || t > n_iter)
    throw_error(ErrorCode::IndexOutOfRange,
                "schedule step must satisfy 0 <= t <= n_iter");
  return params.t_max *
         std::pow(params.t_min / params.t_max,
                  static_cast<double>(t) / static_cast<double>(n_iter));
}

std::pair<Index, Index> suggest_map_size(Index n_objects) {
  if (n_objects < 4)
    throw_error(ErrorCode::InvariantViolation,
                "need at least 4 objects to size a map");
  const double target = 5.0 * std::sqrt(static_cast<double>(n_objects));
  Index best_rows = 2;
  double best_err = std::numeric_limits<double>::infinity();
  // cols = 2 * rows; pick the even row count whose neuron total lands
  // nearest the target.
  for (Index rows = 2; ; rows += 2) {
    const double err =
        std::abs(2.0 * static_cast<double>(rows * rows) - target);
    if (err < best_err) {
      best_err = err;
      best_rows = rows;
    }
    if (2.0 * static_cast<double>(rows * rows) > target) break;
  }
  return {best_rows, 2 * best_rows};
}

}  // namespace dbsom
