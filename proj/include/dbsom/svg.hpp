#pragma once

#include <Eigen/Core>
#include <string>

#include "dbsom/map_grid.hpp"

namespace dbsom {

// Render one value per neuron as a pointy-top hexagon heat map in the grid's
// planar embedding. The fill interpolates white to dark blue, linearly in
// the values or in their logarithms (log_scale requires positive values).
// Output is fully deterministic: fixed-precision coordinates, no timestamps.
std::string render_hex_map(const MapGrid& grid, const Eigen::VectorXd& values,
                           const std::string& title, bool log_scale);

}  // namespace dbsom
