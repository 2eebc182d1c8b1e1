#include "holotrack/components.hpp"

#include <algorithm>

namespace holotrack {

std::vector<Component> label_components(const Grid<std::uint8_t>& mask, Grid<int>* labels) {
    const int nx = mask.nx(), ny = mask.ny();
    Grid<int> local;
    Grid<int>& lab = labels ? *labels : local;
    lab = Grid<int>(nx, ny, 0);

    std::vector<Component> out;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            if (!mask(x, y) || lab(x, y)) continue;
            const int id = static_cast<int>(out.size()) + 1;
            Component c{x, x, y, y, 0, static_cast<std::size_t>(y) * static_cast<std::size_t>(nx) + x};
            lab(x, y) = id;
            stack.assign(1, {x, y});
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                ++c.pixel_count;
                c.min_x = std::min(c.min_x, cx);
                c.max_x = std::max(c.max_x, cx);
                c.min_y = std::min(c.min_y, cy);
                c.max_y = std::max(c.max_y, cy);
                const std::pair<int, int> nbrs[4] = {{cx - 1, cy}, {cx + 1, cy}, {cx, cy - 1}, {cx, cy + 1}};
                for (const auto& [qx, qy] : nbrs) {
                    if (qx < 0 || qy < 0 || qx >= nx || qy >= ny) continue;
                    if (!mask(qx, qy) || lab(qx, qy)) continue;
                    lab(qx, qy) = id;
                    stack.emplace_back(qx, qy);
                }
            }
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace holotrack
