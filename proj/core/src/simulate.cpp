#include "holotrack/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <tuple>

#include <json.hpp>

#include "fft.hpp"
#include "holotrack/csv.hpp"
#include "holotrack/error.hpp"
#include "holotrack/transforms.hpp"

namespace holotrack {

namespace fs = std::filesystem;

void GammaSizeDist::validate() const {
    if (!(shape > 0.0) || !(scale > 0.0)) throw ConfigError("size distribution: shape and scale must be > 0");
    if (!(d_floor > 0.0) || !(d_floor < d_cap)) throw ConfigError("size distribution: need 0 < d_floor < d_cap");
}

void validate_field(const ParticleField& field, const OpticalConfig& cfg) {
    for (std::size_t i = 0; i < field.particles.size(); ++i) {
        const auto& p = field.particles[i];
        const bool ok = p.x >= 0.0 && p.x < cfg.width_um() && p.y >= 0.0 && p.y < cfg.height_um() &&
                        p.z >= cfg.z_min && p.z <= cfg.z_max && p.d > 0.0;
        if (!ok) {
            throw DataError("hologram " + field.hologram_id + ": particle " + std::to_string(i) +
                            " lies outside the configured geometry");
        }
    }
}

std::mt19937_64 make_stream_rng(std::uint64_t master_seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x686f6c6fu};
    return std::mt19937_64(seq);
}

ParticleField sample_field(const OpticalConfig& cfg, int n_particles, const GammaSizeDist& dist,
                           std::uint64_t rng_seed, std::string hologram_id) {
    cfg.validate();
    dist.validate();
    if (n_particles < 0) throw ConfigError("sample_field: n_particles must be >= 0");
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> ux(0.0, cfg.width_um());
    std::uniform_real_distribution<double> uy(0.0, cfg.height_um());
    std::uniform_real_distribution<double> uz(cfg.z_min, cfg.z_max);
    std::gamma_distribution<double> gamma(dist.shape, dist.scale);
    ParticleField field{std::move(hologram_id), {}};
    field.particles.reserve(static_cast<std::size_t>(n_particles));
    for (int i = 0; i < n_particles; ++i) {
        Particle p;
        p.x = ux(rng);
        p.y = uy(rng);
        p.z = uz(rng);
        do {
            p.d = gamma(rng);
        } while (p.d < dist.d_floor || p.d > dist.d_cap);
        field.particles.push_back(p);
    }
    return field;
}

namespace {

// Calls fn(i, j) for every pixel whose centre lies within d/2 of (x, y).
// Centres exactly on the rim count as inside; the slack absorbs rounding in
// i * dx - x so that case is not decided by the last ulp.
template <class Fn>
std::size_t for_each_disk_pixel(double x, double y, double d, double dx, double dy, int nx, int ny, Fn&& fn) {
    const double r = d / 2.0;
    const double r2 = r * r * (1.0 + 1e-9);
    const int i_lo = std::max(0, static_cast<int>(std::ceil((x - r) / dx)) - 1);
    const int i_hi = std::min(nx - 1, static_cast<int>(std::floor((x + r) / dx)) + 1);
    const int j_lo = std::max(0, static_cast<int>(std::ceil((y - r) / dy)) - 1);
    const int j_hi = std::min(ny - 1, static_cast<int>(std::floor((y + r) / dy)) + 1);
    std::size_t touched = 0;
    for (int j = j_lo; j <= j_hi; ++j) {
        const double ey = j * dy - y;
        for (int i = i_lo; i <= i_hi; ++i) {
            const double ex = i * dx - x;
            if (ex * ex + ey * ey <= r2) {
                fn(i, j);
                ++touched;
            }
        }
    }
    return touched;
}

}  // namespace

template <class T>
std::size_t rasterize_disk(Grid<T>& grid, double x, double y, double d, double dx, double dy, T value) {
    return for_each_disk_pixel(x, y, d, dx, dy, grid.nx(), grid.ny(), [&](int i, int j) { grid(i, j) = value; });
}

template std::size_t rasterize_disk(Grid<double>&, double, double, double, double, double, double);
template std::size_t rasterize_disk(Grid<float>&, double, double, double, double, double, float);
template std::size_t rasterize_disk(Grid<std::uint8_t>&, double, double, double, double, double, std::uint8_t);

Grid<double> disk_indicator(const Particle& p, const OpticalConfig& cfg) {
    Grid<double> a(cfg.nx, cfg.ny, 0.0);
    rasterize_disk(a, p.x, p.y, p.d, cfg.dx, cfg.dy, 1.0);
    return a;
}

namespace {

// k * (cos - 1) per frequency bin; NaN marks evanescent bins.
std::vector<double> relative_kz(const OpticalConfig& cfg) {
    const auto rho = frequency_grid(cfg);
    const double k = 2.0 * std::numbers::pi / cfg.wavelength;
    std::vector<double> out(rho.size());
    auto r = rho.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double q = cfg.wavelength * r[i];
        if (q >= 1.0) {
            out[i] = std::numeric_limits<double>::quiet_NaN();
        } else {
            const double c = std::sqrt(1.0 - q * q);
            out[i] = -k * (q * q) / (1.0 + c);
        }
    }
    return out;
}

void apply_relative(std::span<Complex> spectrum, const std::vector<double>& kz_rel, double z) {
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        spectrum[i] = std::isnan(kz_rel[i]) ? Complex{} : spectrum[i] * std::polar(1.0, kz_rel[i] * z);
    }
}

}  // namespace

ComplexField camera_field(const ParticleField& field, const OpticalConfig& cfg, RenderMode mode) {
    cfg.validate();
    validate_field(field, cfg);
    ComplexField e(cfg.nx, cfg.ny, Complex{1.0, 0.0});
    if (field.particles.empty()) return e;

    const auto kz_rel = relative_kz(cfg);
    FftPlan plan(cfg.nx, cfg.ny);
    auto buf = plan.buffer();

    if (mode == RenderMode::superposition) {
        // E = 1 - sum_p P_rel(A_p, -z_p), accumulated in the frequency domain.
        std::vector<Complex> total(buf.size(), Complex{});
        for (const auto& p : field.particles) {
            std::fill(buf.begin(), buf.end(), Complex{});
            for_each_disk_pixel(p.x, p.y, p.d, cfg.dx, cfg.dy, cfg.nx, cfg.ny, [&](int i, int j) {
                buf[static_cast<std::size_t>(j) * static_cast<std::size_t>(cfg.nx) + static_cast<std::size_t>(i)] = 1.0;
            });
            plan.forward();
            apply_relative(buf, kz_rel, -p.z);
            for (std::size_t i = 0; i < buf.size(); ++i) total[i] += buf[i];
        }
        std::copy(total.begin(), total.end(), buf.begin());
        plan.inverse();
        auto out = e.values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - buf[i];
        return e;
    }

    // Sequential: the wave meets particles from the far end toward the camera.
    std::vector<Particle> order = field.particles;
    std::stable_sort(order.begin(), order.end(), [](const Particle& a, const Particle& b) { return a.z > b.z; });
    std::fill(buf.begin(), buf.end(), Complex{1.0, 0.0});
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto a = disk_indicator(order[k], cfg);
        auto av = a.values();
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= (1.0 - av[i]);
        const double next_z = k + 1 < order.size() ? order[k + 1].z : 0.0;
        const double dz = next_z - order[k].z;
        if (dz != 0.0) {
            plan.forward();
            apply_relative(buf, kz_rel, dz);
            plan.inverse();
        }
    }
    std::copy(buf.begin(), buf.end(), e.values().begin());
    return e;
}

Gray8 render_hologram(const ParticleField& field, const OpticalConfig& cfg, const RenderOptions& opts) {
    const auto e = camera_field(field, cfg, opts.mode);
    Grid<double> intensity(cfg.nx, cfg.ny);
    auto in = e.values();
    auto out = intensity.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(in[i]);
    return to_gray8(intensity, opts.background_level);
}

std::vector<TruthMask> render_truth_masks(const ParticleField& field, const OpticalConfig& cfg) {
    cfg.validate();
    std::map<int, std::vector<const Particle*>> by_plane;
    for (const auto& p : field.particles) by_plane[plane_index_for_depth(p.z, cfg)].push_back(&p);
    const auto centers = plane_centers(cfg);
    std::vector<TruthMask> out;
    out.reserve(by_plane.size());
    for (const auto& [plane, particles] : by_plane) {
        TruthMask m{plane, centers[static_cast<std::size_t>(plane)], Grid<std::uint8_t>(cfg.nx, cfg.ny, 0)};
        for (const auto* p : particles) rasterize_disk<std::uint8_t>(m.mask, p->x, p->y, p->d, cfg.dx, cfg.dy, 1);
        out.push_back(std::move(m));
    }
    return out;
}

Grid<std::uint8_t> truth_window(const ParticleField& field, const OpticalConfig& cfg, int plane_index, int x0, int y0,
                                int width, int height) {
    Grid<std::uint8_t> out(width, height, 0);
    for (const auto& p : field.particles) {
        if (plane_index_for_depth(p.z, cfg) != plane_index) continue;
        rasterize_disk<std::uint8_t>(out, p.x - x0 * cfg.dx, p.y - y0 * cfg.dy, p.d, cfg.dx, cfg.dy, 1);
    }
    return out;
}

const char* to_string(TileKind kind) {
    switch (kind) {
        case TileKind::positive: return "positive";
        case TileKind::near_focus: return "near_focus";
        case TileKind::random: return "random";
    }
    return "?";
}

namespace {

std::pair<int, int> center_pixel(const Particle& p, const OpticalConfig& cfg) {
    return {std::clamp(static_cast<int>(std::lround(p.x / cfg.dx)), 0, cfg.nx - 1),
            std::clamp(static_cast<int>(std::lround(p.y / cfg.dy)), 0, cfg.ny - 1)};
}

std::vector<std::size_t> tiles_containing(const TileGrid& grid, int px, int py) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < grid.size(); ++t) {
        if (grid.contains(t, px, py)) out.push_back(t);
    }
    return out;
}

// Conservative test: the particle's bounding box overlaps the tile.
bool disk_touches_tile(const Particle& p, const OpticalConfig& cfg, const TileGrid& grid, std::size_t t) {
    const auto o = grid.positions[t];
    const double r = p.d / 2.0;
    const double x_lo = o.x0 * cfg.dx, x_hi = (o.x0 + grid.tile - 1) * cfg.dx;
    const double y_lo = o.y0 * cfg.dy, y_hi = (o.y0 + grid.tile - 1) * cfg.dy;
    return p.x + r >= x_lo && p.x - r <= x_hi && p.y + r >= y_lo && p.y - r <= y_hi;
}

}  // namespace

std::vector<TileSample> plan_tile_dataset(const std::vector<ParticleField>& truths, const OpticalConfig& cfg,
                                          const TileDatasetSpec& spec) {
    cfg.validate();
    if (spec.n_negatives < 0) throw ConfigError("tile dataset: n_negatives must be >= 0");
    if (!(spec.frac_near_focus >= 0.0 && spec.frac_near_focus <= 1.0)) {
        throw ConfigError("tile dataset: frac_near_focus must lie in [0, 1]");
    }
    const auto grid = build_grid(cfg.nx, cfg.ny, spec.tile, spec.dedup);
    std::mt19937_64 rng(spec.seed);
    std::vector<TileSample> plan;

    // (hologram, particle) list in input order.
    std::vector<std::pair<std::size_t, const Particle*>> all;
    for (std::size_t h = 0; h < truths.size(); ++h) {
        for (const auto& p : truths[h].particles) all.emplace_back(h, &p);
    }

    auto pick = [&rng](const std::vector<std::size_t>& v) {
        std::uniform_int_distribution<std::size_t> u(0, v.size() - 1);
        return v[u(rng)];
    };

    for (const auto& [h, p] : all) {
        const auto [px, py] = center_pixel(*p, cfg);
        plan.push_back({h, plane_index_for_depth(p->z, cfg), pick(tiles_containing(grid, px, py)),
                        TileKind::positive});
    }

    const int n_near = static_cast<int>(std::lround(spec.frac_near_focus * spec.n_negatives));
    const int n_random = spec.n_negatives - n_near;
    if (n_near > 0) {
        if (all.empty()) throw DataError("tile dataset: near-focus negatives requested but there are no particles");
        if (cfg.n_planes < 2) throw ConfigError("tile dataset: near-focus negatives need at least two planes");
    }
    std::uniform_int_distribution<std::size_t> u_particle(0, all.empty() ? 0 : all.size() - 1);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n_near; ++i) {
        const auto& [h, p] = all[u_particle(rng)];
        const int j = plane_index_for_depth(p->z, cfg);
        int plane = coin(rng) ? j + 1 : j - 1;
        if (plane < 0) plane = j + 1;
        if (plane >= cfg.n_planes) plane = j - 1;
        const auto [px, py] = center_pixel(*p, cfg);
        plan.push_back({h, plane, pick(tiles_containing(grid, px, py)), TileKind::near_focus});
    }

    if (n_random > 0) {
        if (truths.empty()) throw DataError("tile dataset: random negatives requested but no holograms given");
        // Per (hologram, plane) particle lists to test for emptiness.
        std::map<std::pair<std::size_t, int>, std::vector<const Particle*>> occupied;
        for (const auto& [h, p] : all) occupied[{h, plane_index_for_depth(p->z, cfg)}].push_back(p);
        auto is_free = [&](std::size_t h, int plane, std::size_t t) {
            auto it = occupied.find({h, plane});
            if (it == occupied.end()) return true;
            return std::none_of(it->second.begin(), it->second.end(),
                                [&](const Particle* p) { return disk_touches_tile(*p, cfg, grid, t); });
        };
        using Key = std::tuple<std::size_t, int, std::size_t>;
        std::set<Key> chosen;
        std::uniform_int_distribution<std::size_t> u_holo(0, truths.size() - 1);
        std::uniform_int_distribution<int> u_plane(0, cfg.n_planes - 1);
        std::uniform_int_distribution<std::size_t> u_tile(0, grid.size() - 1);
        const long long max_attempts = 64LL * n_random + 1024;
        long long attempts = 0;
        while (static_cast<int>(chosen.size()) < n_random && attempts < max_attempts) {
            ++attempts;
            const Key k{u_holo(rng), u_plane(rng), u_tile(rng)};
            if (chosen.count(k) || !is_free(std::get<0>(k), std::get<1>(k), std::get<2>(k))) continue;
            chosen.insert(k);
            plan.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), TileKind::random});
        }
        if (static_cast<int>(chosen.size()) < n_random) {
            // Sampling stalled: enumerate what is left and decide exactly.
            std::vector<Key> remaining;
            for (std::size_t h = 0; h < truths.size(); ++h) {
                for (int j = 0; j < cfg.n_planes; ++j) {
                    for (std::size_t t = 0; t < grid.size(); ++t) {
                        if (!chosen.count({h, j, t}) && is_free(h, j, t)) remaining.emplace_back(h, j, t);
                    }
                }
            }
            const auto missing = static_cast<std::size_t>(n_random) - chosen.size();
            if (remaining.size() < missing) {
                throw DataError("tile dataset: requested " + std::to_string(n_random) +
                                " random negatives but only " + std::to_string(chosen.size() + remaining.size()) +
                                " particle-free tiles exist");
            }
            std::shuffle(remaining.begin(), remaining.end(), rng);
            for (std::size_t i = 0; i < missing; ++i) {
                const auto& k = remaining[i];
                plan.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), TileKind::random});
            }
        }
    }
    return plan;
}

fs::path write_tile_dataset(const std::vector<Gray8>& holograms, const std::vector<ParticleField>& truths,
                            const OpticalConfig& cfg, const TileDatasetSpec& spec, const std::vector<TileSample>& plan,
                            const fs::path& out_dir) {
    if (holograms.size() != truths.size()) {
        throw DataError("tile dataset: " + std::to_string(holograms.size()) + " holograms but " +
                        std::to_string(truths.size()) + " truth fields");
    }
    const auto grid = build_grid(cfg.nx, cfg.ny, spec.tile, spec.dedup);
    const auto centers = plane_centers(cfg);
    fs::create_directories(out_dir / "tiles");
    fs::create_directories(out_dir / "masks");
    const auto manifest_path = out_dir / "manifest.jsonl";
    std::ofstream manifest(manifest_path);
    if (!manifest) throw DataError("cannot write " + manifest_path.string());

    // Group by hologram, then plane, so each plane is reconstructed once.
    std::vector<std::size_t> order(plan.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(plan[a].hologram, plan[a].plane_index) < std::tie(plan[b].hologram, plan[b].plane_index);
    });
    std::vector<std::string> lines(plan.size());

    std::size_t current_holo = static_cast<std::size_t>(-1);
    int current_plane = -1;
    std::unique_ptr<Refocuser> refocuser;
    std::optional<Refocuser::Workspace> ws;
    IntensityImage plane_img;
    for (std::size_t idx : order) {
        const auto& s = plan[idx];
        if (s.hologram >= holograms.size()) throw DataError("tile dataset: plan references a missing hologram");
        if (s.hologram != current_holo) {
            const auto h_c = normalize_by_mean(grid_cast<double>(holograms[s.hologram]));
            refocuser = std::make_unique<Refocuser>(h_c, cfg);
            ws.emplace(refocuser->make_workspace());
            current_holo = s.hologram;
            current_plane = -1;
        }
        if (s.plane_index != current_plane) {
            plane_img = refocuser->reconstruct(centers[static_cast<std::size_t>(s.plane_index)], *ws);
            current_plane = s.plane_index;
        }
        // 8-bit gray scale: the background amplitude 1 maps to 127
        auto tile = scale_brightness(extract(plane_img, grid, s.tile_index), 127.0);
        const auto o = grid.positions[s.tile_index];
        auto mask = truth_window(truths[s.hologram], cfg, s.plane_index, o.x0, o.y0, grid.tile, grid.tile);
        const bool label = std::any_of(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; });
        for (auto& v : mask.values()) v = v ? 255 : 0;
        if (spec.augment) {
            auto rng = make_stream_rng(spec.seed ^ 0x5eedULL, idx);
            tile = corrupt(tile, *spec.augment, rng);
            std::tie(tile, mask) = random_flip(tile, mask, spec.augment->flip_prob, rng);
        }

        const std::string stem = "ex" + std::to_string(idx);
        const auto tile_rel = fs::path("tiles") / (stem + ".pgm");
        const auto mask_rel = fs::path("masks") / (stem + ".pgm");
        write_pgm(out_dir / tile_rel, to_gray8(tile));
        write_pgm(out_dir / mask_rel, mask);
        nlohmann::json rec = {{"tile", tile_rel.generic_string()},
                              {"mask", mask_rel.generic_string()},
                              {"hid", truths[s.hologram].hologram_id},
                              {"plane", s.plane_index},
                              {"tile_index", s.tile_index},
                              {"kind", to_string(s.kind)},
                              {"label", label ? 1 : 0}};
        lines[idx] = rec.dump();
    }
    for (const auto& l : lines) manifest << l << '\n';
    if (!manifest) throw DataError("write failed: " + manifest_path.string());
    return manifest_path;
}

fs::path make_tile_dataset(const std::vector<Gray8>& holograms, const std::vector<ParticleField>& truths,
                           const OpticalConfig& cfg, const TileDatasetSpec& spec, const fs::path& out_dir) {
    const auto plan = plan_tile_dataset(truths, cfg, spec);
    return write_tile_dataset(holograms, truths, cfg, spec, plan, out_dir);
}

std::vector<std::string> assign_splits(int n_holograms, const SplitSpec& spec) {
    if (spec.n_train < 0 || spec.n_valid < 0 || spec.n_test < 0) throw ConfigError("split counts must be >= 0");
    if (n_holograms < 0) throw ConfigError("hologram count must be >= 0");
    if (spec.n_valid + spec.n_test > n_holograms) {
        throw ConfigError("split: validation + test counts exceed the number of holograms");
    }
    std::vector<int> idx(static_cast<std::size_t>(n_holograms));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(spec.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::string> out(static_cast<std::size_t>(n_holograms), "train");
    for (int k = 0; k < spec.n_valid; ++k) out[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = "valid";
    for (int k = spec.n_valid; k < spec.n_valid + spec.n_test; ++k) {
        out[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = "test";
    }
    return out;
}

void write_particles_csv(std::ostream& out, const std::vector<ParticleField>& fields) {
    out << "hid,x_um,y_um,z_um,d_um\n";
    for (const auto& f : fields) {
        for (const auto& p : f.particles) {
            out << f.hologram_id << ',' << csv::format_number(p.x) << ',' << csv::format_number(p.y) << ','
                << csv::format_number(p.z) << ',' << csv::format_number(p.d) << '\n';
        }
    }
}

void write_particles_csv(const fs::path& path, const std::vector<ParticleField>& fields) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_particles_csv(out, fields);
    if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ParticleField> read_particles_csv(const fs::path& path) {
    const auto table = csv::read(path);
    const auto c_hid = table.column("hid");
    const auto c_x = table.column("x_um");
    const auto c_y = table.column("y_um");
    const auto c_z = table.column("z_um");
    const auto c_d = table.column("d_um");
    std::vector<ParticleField> fields;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto [it, inserted] = index.try_emplace(row[c_hid], fields.size());
        if (inserted) fields.push_back({row[c_hid], {}});
        fields[it->second].particles.push_back({csv::parse_double(row[c_x], path, r + 1),
                                                csv::parse_double(row[c_y], path, r + 1),
                                                csv::parse_double(row[c_z], path, r + 1),
                                                csv::parse_double(row[c_d], path, r + 1)});
    }
    return fields;
}

}  // namespace holotrack
