#pragma once

// Reference implementations used to check the library. They are written
// for clarity, not speed, and share no code with core/.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "holotrack/detect3d.hpp"
#include "holotrack/grid.hpp"
#include "holotrack/optics.hpp"
#include "holotrack/tiling.hpp"

namespace oracle {

using holotrack::Complex;
using holotrack::ComplexField;

inline double fftfreq(int k, int n, double d) {
    const int signed_k = k < (n + 1) / 2 ? k : k - n;
    return signed_k / (n * d);
}

// One-dimensional DFT along x (rows) or y (columns); sign -1 forward.
inline ComplexField dft_axis(const ComplexField& in, bool along_x, int sign) {
    const int nx = in.nx(), ny = in.ny();
    ComplexField out(nx, ny);
    const int n = along_x ? nx : ny;
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            const int k = along_x ? x : y;
            Complex acc{};
            for (int m = 0; m < n; ++m) {
                const double ang = sign * 2.0 * std::numbers::pi * k * m / n;
                const Complex v = along_x ? in(m, y) : in(x, m);
                acc += v * Complex(std::cos(ang), std::sin(ang));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

inline ComplexField dft2(const ComplexField& in) { return dft_axis(dft_axis(in, true, -1), false, -1); }

inline ComplexField idft2(const ComplexField& in) {
    auto out = dft_axis(dft_axis(in, true, +1), false, +1);
    const double scale = 1.0 / (static_cast<double>(in.nx()) * in.ny());
    for (auto& v : out.values()) v *= scale;
    return out;
}

inline double lambda_rho(int u, int v, const holotrack::OpticalConfig& cfg) {
    const double fx = fftfreq(u, cfg.nx, cfg.dx), fy = fftfreq(v, cfg.ny, cfg.dy);
    return cfg.wavelength * std::sqrt(fx * fx + fy * fy);
}

// Angular spectrum with a direct DFT.
inline ComplexField propagate(const ComplexField& field, double z, const holotrack::OpticalConfig& cfg) {
    auto spec = dft2(field);
    for (int v = 0; v < cfg.ny; ++v) {
        for (int u = 0; u < cfg.nx; ++u) {
            const double lr = lambda_rho(u, v, cfg);
            if (lr >= 1.0) {
                spec(u, v) = 0.0;
                continue;
            }
            const double phase = 2.0 * std::numbers::pi * z / cfg.wavelength * std::sqrt(1.0 - lr * lr);
            spec(u, v) *= Complex(std::cos(phase), std::sin(phase));
        }
    }
    return idft2(spec);
}

// Random field whose spectrum is confined to lambda*rho < limit.
inline ComplexField band_limited_field(const holotrack::OpticalConfig& cfg, std::mt19937_64& rng, double limit = 0.95) {
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexField spec(cfg.nx, cfg.ny);
    for (int v = 0; v < cfg.ny; ++v) {
        for (int u = 0; u < cfg.nx; ++u) {
            if (lambda_rho(u, v, cfg) < limit) spec(u, v) = Complex(g(rng), g(rng));
        }
    }
    return idft2(spec);
}

inline double max_abs_diff(const ComplexField& a, const ComplexField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

inline double energy(const ComplexField& f) {
    double e = 0.0;
    for (const auto& v : f.values()) e += std::norm(v);
    return e;
}

// Union-find labelling of 4-connected foreground pixels. Returns one
// (min_x, max_x, min_y, max_y, count) box per component, sorted by the raster
// position of its first pixel.
struct Box {
    int min_x, max_x, min_y, max_y;
    std::size_t count;
    std::size_t first;
};

inline std::vector<Box> components(const holotrack::Grid<std::uint8_t>& mask) {
    const int nx = mask.nx(), ny = mask.ny();
    std::vector<std::size_t> parent(mask.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            if (!mask(x, y)) continue;
            const std::size_t i = static_cast<std::size_t>(y) * nx + x;
            if (x + 1 < nx && mask(x + 1, y)) unite(i, i + 1);
            if (y + 1 < ny && mask(x, y + 1)) unite(i, i + nx);
        }
    }
    std::vector<Box> boxes;
    std::vector<long> slot(mask.size(), -1);
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            if (!mask(x, y)) continue;
            const std::size_t i = static_cast<std::size_t>(y) * nx + x;
            const std::size_t r = find(i);
            if (slot[r] < 0) {
                slot[r] = static_cast<long>(boxes.size());
                boxes.push_back({x, x, y, y, 0, i});
            }
            auto& b = boxes[static_cast<std::size_t>(slot[r])];
            b.min_x = std::min(b.min_x, x);
            b.max_x = std::max(b.max_x, x);
            b.min_y = std::min(b.min_y, y);
            b.max_y = std::max(b.max_y, y);
            ++b.count;
        }
    }
    return boxes;
}

inline double dist4(const holotrack::Particle& a, const holotrack::Particle& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z, dd = a.d - b.d;
    return std::sqrt(dx * dx + dy * dy + dz * dz + dd * dd);
}

// Greedy pairing that rescans every remaining combination each round.
struct Pair {
    std::size_t pred, truth;
    double distance;
};

inline std::vector<Pair> greedy_pairs(const std::vector<holotrack::Particle>& pred,
                                      const std::vector<holotrack::Particle>& truth) {
    std::vector<bool> used_p(pred.size()), used_t(truth.size());
    std::vector<Pair> out;
    while (true) {
        bool found = false;
        Pair best{0, 0, std::numeric_limits<double>::infinity()};
        for (std::size_t p = 0; p < pred.size(); ++p) {
            if (used_p[p]) continue;
            for (std::size_t t = 0; t < truth.size(); ++t) {
                if (used_t[t]) continue;
                const double d = dist4(pred[p], truth[t]);
                // strict < keeps the lowest (pred, truth) among ties
                if (!found || d < best.distance) {
                    best = {p, t, d};
                    found = true;
                }
            }
        }
        if (!found) break;
        used_p[best.pred] = used_t[best.truth] = true;
        out.push_back(best);
    }
    return out;
}

// Leader clustering exactly as traced by hand: visit by plane (stable), join
// the first leader within the threshold, otherwise lead a new group.
struct LeaderResult {
    std::vector<std::vector<std::size_t>> groups;  // indices into the input
};

inline LeaderResult leader(const std::vector<holotrack::Detection>& dets, double threshold) {
    std::vector<std::size_t> order;
    for (int plane = 0;; ++plane) {
        bool any_later = false;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            if (dets[i].plane_index == plane) order.push_back(i);
            if (dets[i].plane_index > plane) any_later = true;
        }
        if (!any_later) break;
    }
    LeaderResult r;
    for (std::size_t i : order) {
        bool joined = false;
        for (auto& g : r.groups) {
            if (dist4(dets[i].position(), dets[g.front()].position()) <= threshold) {
                g.push_back(i);
                joined = true;
                break;
            }
        }
        if (!joined) r.groups.push_back({i});
    }
    return r;
}

// Per-pixel mean over every tile that covers the pixel.
inline holotrack::Grid<double> reassemble(const std::vector<holotrack::Grid<float>>& tiles,
                                          const holotrack::TileGrid& grid) {
    holotrack::Grid<double> out(grid.image_nx, grid.image_ny);
    for (int y = 0; y < grid.image_ny; ++y) {
        for (int x = 0; x < grid.image_nx; ++x) {
            double sum = 0.0;
            int n = 0;
            for (std::size_t t = 0; t < grid.positions.size(); ++t) {
                const auto o = grid.positions[t];
                if (x >= o.x0 && x < o.x0 + grid.tile && y >= o.y0 && y < o.y0 + grid.tile) {
                    sum += tiles[t](x - o.x0, y - o.y0);
                    ++n;
                }
            }
            out(x, y) = n ? sum / n : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

}  // namespace oracle
