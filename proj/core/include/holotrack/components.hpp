#pragma once

#include <cstdint>
#include <vector>

#include "holotrack/grid.hpp"

namespace holotrack {

/// Bounding box and size of one 4-connected foreground component.
struct Component {
    int min_x = 0;
    int max_x = 0;
    int min_y = 0;
    int max_y = 0;
    std::size_t pixel_count = 0;
    /// Raster index (y * nx + x) of the first pixel reached by the scan.
    std::size_t seed = 0;
};

/// Labels non-zero pixels into 4-connected components (no diagonal
/// adjacency). Components are returned in raster order of their first pixel.
/// If `labels` is non-null it receives 1-based component ids (0 = background).
std::vector<Component> label_components(const Grid<std::uint8_t>& mask, Grid<int>* labels = nullptr);

}  // namespace holotrack
