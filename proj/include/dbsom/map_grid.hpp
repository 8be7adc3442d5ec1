#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>

#include "dbsom/error.hpp"

namespace dbsom {

using Index = Eigen::Index;

enum class Topology { Planar, Toroidal };

const char* topology_name(Topology topo);
Topology topology_from_name(const std::string& name);

// Hexagonal neuron lattice embedded in the plane: unit pitch along rows,
// sqrt(3)/2 between rows, odd rows shifted by +1/2. Neuron m = r * cols + c.
// Topological distance is Euclidean in the embedding; the toroidal variant
// takes the minimum over the 3x3 wrapped images (periods cols horizontally
// and rows * sqrt(3)/2 vertically), which is why toroidal maps need even row
// and column counts (odd wraps would break row parity).
class MapGrid {
 public:
  MapGrid(Index rows, Index cols, Topology topology);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return rows_ * cols_; }
  Topology topology() const { return topology_; }

  Eigen::Vector2d position(Index m) const { return coords_.row(m); }
  double distance(Index a, Index b) const { return dist_(a, b); }
  const Eigen::MatrixXd& distances() const { return dist_; }

  // Six lattice neighbours sit at distance exactly 1.
  bool adjacent(Index a, Index b) const {
    return a != b && dist_(a, b) <= 1.0 + 1e-9;
  }

  double diameter() const { return dist_.maxCoeff(); }

  // exp(-d^2 / (2 T^2)) for every neuron pair.
  Eigen::MatrixXd kernel_matrix(double T) const;

 private:
  Index rows_;
  Index cols_;
  Topology topology_;
  Eigen::MatrixXd coords_;  // M x 2
  Eigen::MatrixXd dist_;    // M x M
};

// Neighbourhood influence of a neuron at topological distance dist when the
// radius is T.
double kernel(double dist, double T);

struct KernelParams {
  double t_max = 0.0;
  double t_min = 0.0;
};

// Radii from the kernel boundary conditions: influence 0.1 at half the grid
// diameter when the radius is t_max, influence 0.01 at distance 1 when it is
// t_min.
KernelParams default_radii(const MapGrid& grid);

// Geometric decay from t_max (t = 0) towards t_min (t = n_iter).
double radius_schedule(Index t, Index n_iter, const KernelParams& params);

// Grid shape for N objects: about 5 sqrt(N) neurons, even sides, columns
// twice the rows. Returns {rows, cols}.
std::pair<Index, Index> suggest_map_size(Index n_objects);

}  // namespace dbsom
