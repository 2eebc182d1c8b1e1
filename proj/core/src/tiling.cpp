#include "holotrack/tiling.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

#include "holotrack/error.hpp"

namespace holotrack {

void TileSpec::validate() const {
    if (tile <= 0 || step <= 0 || step > tile) {
        throw ConfigError("tile spec: need 0 < step <= tile (got tile=" + std::to_string(tile) +
                          ", step=" + std::to_string(step) + ")");
    }
}

bool TileGrid::contains(std::size_t index, int x, int y) const {
    const auto& o = positions.at(index);
    return x >= o.x0 && x < o.x0 + tile && y >= o.y0 && y < o.y0 + tile;
}

std::vector<int> axis_origins(int dim, const TileSpec& spec, bool dedup) {
    spec.validate();
    if (dim < spec.tile) {
        throw ConfigError("image dimension " + std::to_string(dim) + " is smaller than tile size " +
                          std::to_string(spec.tile));
    }
    const int last = dim - spec.tile;
    // Unclamped origins k*step <= last, plus one clamped tile when the last
    // unclamped one stops short of the edge.
    const int covering = last / spec.step + 1 + (last % spec.step != 0 ? 1 : 0);
    const int count = dedup ? covering : std::max(dim / spec.step, covering);
    std::vector<int> origins;
    origins.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const int o = std::min(k * spec.step, last);
        if (dedup && !origins.empty() && origins.back() == o) continue;
        origins.push_back(o);
    }
    return origins;
}

TileGrid build_grid(int nx, int ny, const TileSpec& spec, bool dedup) {
    const auto xs = axis_origins(nx, spec, dedup);
    const auto ys = axis_origins(ny, spec, dedup);
    TileGrid g;
    g.image_nx = nx;
    g.image_ny = ny;
    g.tile = spec.tile;
    g.nx_tiles = static_cast<int>(xs.size());
    g.ny_tiles = static_cast<int>(ys.size());
    g.positions.reserve(xs.size() * ys.size());
    for (int y0 : ys) {
        for (int x0 : xs) g.positions.push_back({x0, y0});
    }
    return g;
}

template <class T>
Grid<T> extract(const Grid<T>& plane, const TileGrid& grid, std::size_t index) {
    if (index >= grid.positions.size()) {
        throw DataError("extract: tile index " + std::to_string(index) + " out of range (" +
                        std::to_string(grid.positions.size()) + " tiles)");
    }
    if (plane.nx() != grid.image_nx || plane.ny() != grid.image_ny) {
        throw DataError("extract: plane dimensions do not match the tile grid");
    }
    const auto o = grid.positions[index];
    Grid<T> out(grid.tile, grid.tile);
    for (int y = 0; y < grid.tile; ++y) {
        auto src = plane.row(o.y0 + y).subspan(static_cast<std::size_t>(o.x0), static_cast<std::size_t>(grid.tile));
        std::copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

template Grid<double> extract(const Grid<double>&, const TileGrid&, std::size_t);
template Grid<float> extract(const Grid<float>&, const TileGrid&, std::size_t);
template Grid<std::uint8_t> extract(const Grid<std::uint8_t>&, const TileGrid&, std::size_t);

Grid<int> coverage_count(const TileGrid& grid) {
    Grid<int> count(grid.image_nx, grid.image_ny, 0);
    for (const auto& o : grid.positions) {
        for (int y = o.y0; y < o.y0 + grid.tile; ++y) {
            for (int x = o.x0; x < o.x0 + grid.tile; ++x) ++count(x, y);
        }
    }
    return count;
}

TileAccumulator::TileAccumulator(const TileGrid& grid)
    : grid_(&grid), maps_(grid.size()), present_(grid.size(), 0) {}

void TileAccumulator::add(std::size_t index, Grid<float> probs) {
    if (index >= maps_.size()) throw DataError("reassemble: tile index " + std::to_string(index) + " out of range");
    if (present_[index]) throw DataError("reassemble: duplicate tile index " + std::to_string(index));
    if (probs.nx() != grid_->tile || probs.ny() != grid_->tile) {
        throw DataError("reassemble: tile " + std::to_string(index) + " is " + std::to_string(probs.nx()) + "x" +
                        std::to_string(probs.ny()) + ", expected " + std::to_string(grid_->tile));
    }
    maps_[index] = std::move(probs);
    present_[index] = 1;
}

void TileAccumulator::add_zero(std::size_t index) {
    if (index >= maps_.size()) throw DataError("reassemble: tile index " + std::to_string(index) + " out of range");
    if (present_[index]) throw DataError("reassemble: duplicate tile index " + std::to_string(index));
    present_[index] = 1;
}

Grid<float> TileAccumulator::finish() const {
    for (std::size_t i = 0; i < present_.size(); ++i) {
        if (!present_[i]) throw DataError("reassemble: missing tile index " + std::to_string(i));
    }
    const auto& g = *grid_;
    Grid<double> sum(g.image_nx, g.image_ny, 0.0);
    Grid<int> count(g.image_nx, g.image_ny, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto o = g.positions[i];
        const bool has_values = !maps_[i].empty();
        for (int y = 0; y < g.tile; ++y) {
            auto c = count.row(o.y0 + y).subspan(static_cast<std::size_t>(o.x0), static_cast<std::size_t>(g.tile));
            for (auto& v : c) ++v;
            if (!has_values) continue;
            auto s = sum.row(o.y0 + y).subspan(static_cast<std::size_t>(o.x0), static_cast<std::size_t>(g.tile));
            auto p = maps_[i].row(y);
            for (std::size_t x = 0; x < s.size(); ++x) s[x] += p[x];
        }
    }
    Grid<float> out(g.image_nx, g.image_ny, 0.0f);
    auto s = sum.values();
    auto c = count.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = c[i] > 0 ? static_cast<float>(s[i] / c[i]) : 0.0f;
    }
    return out;
}

Grid<float> reassemble(const std::vector<std::pair<std::size_t, Grid<float>>>& tile_probs, const TileGrid& grid) {
    TileAccumulator acc(grid);
    for (const auto& [index, probs] : tile_probs) acc.add(index, probs);
    return acc.finish();
}

}  // namespace holotrack
