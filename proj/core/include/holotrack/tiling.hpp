#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "holotrack/grid.hpp"

namespace holotrack {

struct TileSpec {
    int tile = 512;
    int step = 128;

    void validate() const;
    friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

struct TileOrigin {
    int x0 = 0;
    int y0 = 0;
    friend auto operator<=>(const TileOrigin&, const TileOrigin&) = default;
};

/// Square tile placement over an image. Origins are stored row by row
/// (y0 major, then x0), which is strictly increasing in (y0, x0).
struct TileGrid {
    int image_nx = 0;
    int image_ny = 0;
    int tile = 0;
    std::vector<TileOrigin> positions;
    int nx_tiles = 0;
    int ny_tiles = 0;

    std::size_t size() const { return positions.size(); }
    bool contains(std::size_t index, int x, int y) const;
};

/// Per-axis tile origins. Without dedup the axis holds max(floor(dim/step),
/// minimum covering count) origins at multiples of step, clamped so no tile
/// overshoots; with dedup the clamped duplicates are dropped.
std::vector<int> axis_origins(int dim, const TileSpec& spec, bool dedup);

/// Throws ConfigError if the image is smaller than one tile.
TileGrid build_grid(int nx, int ny, const TileSpec& spec, bool dedup);

template <class T>
Grid<T> extract(const Grid<T>& plane, const TileGrid& grid, std::size_t index);

/// Number of tiles covering each pixel.
Grid<int> coverage_count(const TileGrid& grid);

/// Accumulates tile-sized maps into a full-size plane and divides by the
/// per-pixel coverage count. Contributions may be added in any order; they are
/// summed in tile-index order so the result is bit-reproducible.
class TileAccumulator {
public:
    explicit TileAccumulator(const TileGrid& grid);

    /// Throws DataError on a duplicate index, an out-of-range index or a map
    /// whose size is not tile x tile.
    void add(std::size_t index, Grid<float> probs);
    /// Marks a tile as contributing zeros without materializing it.
    void add_zero(std::size_t index);

    /// Throws DataError naming the first missing tile index.
    Grid<float> finish() const;

private:
    const TileGrid* grid_;
    std::vector<Grid<float>> maps_;
    std::vector<char> present_;
};

Grid<float> reassemble(const std::vector<std::pair<std::size_t, Grid<float>>>& tile_probs, const TileGrid& grid);

}  // namespace holotrack
