#include "holotrack/detect3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "holotrack/components.hpp"
#include "holotrack/csv.hpp"
#include "holotrack/error.hpp"
#include "holotrack/parallel.hpp"

namespace holotrack {

void MatchSpec::validate() const {
    if (!(threshold > 0.0)) throw ConfigError("match threshold must be > 0");
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("match weights must be finite and >= 0");
    }
}

double particle_distance(const Particle& a, const Particle& b, const std::array<double, 4>& w) {
    const double dx = w[0] * (a.x - b.x);
    const double dy = w[1] * (a.y - b.y);
    const double dz = w[2] * (a.z - b.z);
    const double dd = w[3] * (a.d - b.d);
    return std::sqrt(dx * dx + dy * dy + dz * dz + dd * dd);
}

std::vector<Detection> extract_particles(const Grid<std::uint8_t>& mask, int plane_index, const OpticalConfig& cfg) {
    const double z = cfg.z_min + (plane_index + 0.5) * cfg.plane_spacing();
    std::vector<Detection> out;
    for (const auto& c : label_components(mask)) {
        Detection d;
        d.x = cfg.dx * (c.min_x + c.max_x) / 2.0;
        d.y = cfg.dy * (c.min_y + c.max_y) / 2.0;
        d.z = z;
        d.d = std::max((c.max_x - c.min_x + 1) * cfg.dx, (c.max_y - c.min_y + 1) * cfg.dy);
        d.plane_index = plane_index;
        d.pixel_count = c.pixel_count;
        out.push_back(d);
    }
    return out;
}

std::vector<Detection> extract_particles(const MaskPlane& plane, const OpticalConfig& cfg, double threshold) {
    const auto binary = plane.binarize(threshold);
    Grid<int> labels;
    const auto comps = label_components(binary, &labels);
    std::vector<double> peak(comps.size(), 0.0);
    auto l = labels.values();
    auto p = plane.probs.values();
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (l[i] > 0) {
            auto& s = peak[static_cast<std::size_t>(l[i] - 1)];
            s = std::max(s, static_cast<double>(p[i]));
        }
    }
    auto dets = extract_particles(binary, plane.plane_index, cfg);
    for (std::size_t i = 0; i < dets.size(); ++i) dets[i].score = peak[i];
    return dets;
}

namespace {

struct CellKey {
    long long a, b, c;
    bool operator==(const CellKey&) const = default;
};
struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept {
        std::size_t h = static_cast<std::size_t>(k.a) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::size_t>(k.b) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
        h ^= static_cast<std::size_t>(k.c) + 0x94D049BB133111EBull + (h << 6) + (h >> 2);
        return h;
    }
};

// Leaders bucketed on a grid of cell size `threshold` in weighted (x, y, z).
// A leader within the threshold always lies in one of the 27 neighbouring
// cells because the 4-D distance bounds the 3-D one.
class LeaderIndex {
public:
    LeaderIndex(double threshold, const std::array<double, 4>& w) : thr_(threshold), w_(w) {}

    std::optional<CellKey> key(const Particle& p) const {
        const double c[3] = {w_[0] * p.x / thr_, w_[1] * p.y / thr_, w_[2] * p.z / thr_};
        long long k[3];
        for (int i = 0; i < 3; ++i) {
            if (!std::isfinite(c[i]) || std::abs(c[i]) > 1e15) return std::nullopt;
            k[i] = static_cast<long long>(std::floor(c[i]));
        }
        return CellKey{k[0], k[1], k[2]};
    }

    void insert(const CellKey& k, std::size_t cluster) { cells_[k].push_back(cluster); }

    template <class F>
    void for_each_near(const CellKey& k, F&& f) const {
        for (long long da = -1; da <= 1; ++da)
            for (long long db = -1; db <= 1; ++db)
                for (long long dc = -1; dc <= 1; ++dc) {
                    auto it = cells_.find({k.a + da, k.b + db, k.c + dc});
                    if (it == cells_.end()) continue;
                    for (std::size_t c : it->second) f(c);
                }
    }

private:
    double thr_;
    std::array<double, 4> w_;
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

}  // namespace

ClusteringResult leader_cluster(std::span<const Detection> dets, const MatchSpec& spec) {
    spec.validate();
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].plane_index < dets[b].plane_index; });

    std::vector<std::vector<Detection>> groups;
    std::vector<Particle> leaders;

    // Bucketing only applies when every detection gets a finite cell key;
    // otherwise fall back to scanning all leaders.
    LeaderIndex index(spec.threshold, spec.weights);
    std::vector<CellKey> keys;
    bool bucketed = true;
    keys.reserve(dets.size());
    for (std::size_t i : order) {
        auto k = index.key(dets[i].position());
        if (!k) {
            bucketed = false;
            break;
        }
        keys.push_back(*k);
    }

    for (std::size_t n = 0; n < order.size(); ++n) {
        const Detection& det = dets[order[n]];
        const Particle pos = det.position();
        std::size_t best = std::numeric_limits<std::size_t>::max();
        auto consider = [&](std::size_t c) {
            if (c < best && particle_distance(pos, leaders[c], spec.weights) <= spec.threshold) best = c;
        };
        if (bucketed) {
            index.for_each_near(keys[n], consider);
        } else {
            for (std::size_t c = 0; c < leaders.size(); ++c) {
                if (particle_distance(pos, leaders[c], spec.weights) <= spec.threshold) {
                    best = c;
                    break;
                }
            }
        }
        if (best != std::numeric_limits<std::size_t>::max()) {
            groups[best].push_back(det);
        } else {
            if (bucketed) index.insert(keys[n], groups.size());
            leaders.push_back(pos);
            groups.push_back({det});
        }
    }

    ClusteringResult result;
    for (auto& g : groups) {
        if (g.size() == 1) {
            result.unassigned.push_back(g.front());
            continue;
        }
        Particle c{};
        for (const auto& m : g) {
            c.x += m.x;
            c.y += m.y;
            c.z += m.z;
            c.d += m.d;
        }
        const double n = static_cast<double>(g.size());
        c = {c.x / n, c.y / n, c.z / n, c.d / n};
        result.clusters.push_back({std::move(g), c});
    }
    return result;
}

std::vector<PredictedParticle> predicted_particles(const ClusteringResult& result) {
    std::vector<PredictedParticle> out;
    out.reserve(result.particle_count());
    for (const auto& c : result.clusters) {
        double score = 0.0;
        for (const auto& m : c.members) score = std::max(score, m.score);
        out.push_back({c.centroid, static_cast<int>(c.members.size()), true, score});
    }
    for (const auto& u : result.unassigned) out.push_back({u.position(), 1, false, u.score});
    return out;
}

std::vector<Detection> detect_planes(const IntensityImage& h_c, std::string_view hologram_id,
                                     const OpticalConfig& cfg, const Segmenter& segmenter,
                                     const PipelineOptions& opts) {
    cfg.validate();
    if (opts.workers < 1) throw ConfigError("worker count must be >= 1");
    const auto grid = build_grid(cfg.nx, cfg.ny, opts.tile, opts.dedup_tiles);
    const auto centers = plane_centers(cfg);
    const bool need_pixels = segmenter.needs_pixels() || opts.always_reconstruct;

    std::optional<Refocuser> refocuser;
    if (need_pixels) refocuser.emplace(h_c, cfg);

    std::vector<std::optional<Refocuser::Workspace>> workspaces(static_cast<std::size_t>(opts.workers));
    std::vector<std::vector<Detection>> per_plane(centers.size());

    parallel_for(centers.size(), opts.workers, [&](std::size_t j, std::size_t worker) {
        const int plane = static_cast<int>(j);
        if (!opts.mask_export && !opts.always_reconstruct && !segmenter.may_detect(hologram_id, plane)) return;

        IntensityImage amplitude;
        if (need_pixels) {
            auto& ws = workspaces[worker];
            if (!ws) ws.emplace(refocuser->make_workspace());
            amplitude = refocuser->reconstruct(centers[j], *ws);
        }

        TileAccumulator acc(grid);
        for (std::size_t t = 0; t < grid.size(); ++t) {
            TileRequest req;
            req.hologram_id = hologram_id;
            req.plane_index = plane;
            req.z = centers[j];
            req.tile_index = t;
            req.origin = grid.positions[t];
            req.tile_size = grid.tile;
            Grid<double> pixels;
            if (segmenter.needs_pixels()) {
                pixels = apply_value_transform(extract(amplitude, grid, t), opts.tile_transform);
                req.pixels = &pixels;
            }
            auto probs = segmenter.predict(req);
            if (probs.nx() != grid.tile || probs.ny() != grid.tile) {
                throw DataError("segmenter returned a " + std::to_string(probs.nx()) + "x" +
                                std::to_string(probs.ny()) + " map for a " + std::to_string(grid.tile) + " tile");
            }
            if (opts.mask_export) opts.mask_export->write(hologram_id, plane, t, probs);
            const bool all_zero =
                std::all_of(probs.values().begin(), probs.values().end(), [](float v) { return v == 0.0f; });
            if (all_zero) {
                acc.add_zero(t);
            } else {
                acc.add(t, std::move(probs));
            }
        }
        MaskPlane mp{plane, centers[j], acc.finish()};
        per_plane[j] = extract_particles(mp, cfg, opts.binarize_threshold);
    });

    std::vector<Detection> all;
    for (auto& v : per_plane) all.insert(all.end(), v.begin(), v.end());
    return all;
}

HologramResult process_hologram(const IntensityImage& hologram, std::string_view hologram_id,
                                const OpticalConfig& cfg, const Segmenter& segmenter, const PipelineOptions& opts,
                                std::span<const IntensityImage> background) {
    opts.match.validate();
    auto h_c = background.empty() ? normalize_by_mean(hologram) : normalize_background(hologram, background);
    h_c = apply_value_transform(h_c, opts.hologram_transform);

    HologramResult r;
    r.detections = detect_planes(h_c, hologram_id, cfg, segmenter, opts);
    r.clustering = leader_cluster(r.detections, opts.match);
    r.particles = predicted_particles(r.clustering);
    return r;
}

void write_predictions_header(std::ostream& out) { out << "hid,x_um,y_um,z_um,d_um,n_members,assigned\n"; }

void write_predictions(std::ostream& out, std::string_view hologram_id, const std::vector<PredictedParticle>& ps) {
    for (const auto& p : ps) {
        out << hologram_id << ',' << csv::format_number(p.p.x) << ',' << csv::format_number(p.p.y) << ','
            << csv::format_number(p.p.z) << ',' << csv::format_number(p.p.d) << ',' << p.n_members << ','
            << (p.assigned ? 1 : 0) << '\n';
    }
}

void write_detections_header(std::ostream& out) { out << "hid,plane,x_um,y_um,z_um,d_um,pixels,score\n"; }

void write_detections(std::ostream& out, std::string_view hologram_id, const std::vector<Detection>& dets) {
    for (const auto& d : dets) {
        out << hologram_id << ',' << d.plane_index << ',' << csv::format_number(d.x) << ','
            << csv::format_number(d.y) << ',' << csv::format_number(d.z) << ',' << csv::format_number(d.d) << ','
            << d.pixel_count << ',' << csv::format_number(d.score) << '\n';
    }
}

std::vector<std::pair<std::string, std::vector<Detection>>> read_detections_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto c_hid = t.column("hid"), c_plane = t.column("plane"), c_x = t.column("x_um"), c_y = t.column("y_um"),
               c_z = t.column("z_um"), c_d = t.column("d_um"), c_px = t.column("pixels"), c_s = t.column("score");
    std::vector<std::pair<std::string, std::vector<Detection>>> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        Detection d;
        d.plane_index = static_cast<int>(csv::parse_int(row[c_plane], path, r + 1));
        d.x = csv::parse_double(row[c_x], path, r + 1);
        d.y = csv::parse_double(row[c_y], path, r + 1);
        d.z = csv::parse_double(row[c_z], path, r + 1);
        d.d = csv::parse_double(row[c_d], path, r + 1);
        d.pixel_count = static_cast<std::size_t>(csv::parse_int(row[c_px], path, r + 1));
        d.score = csv::parse_double(row[c_s], path, r + 1);
        auto [it, inserted] = index.try_emplace(row[c_hid], out.size());
        if (inserted) out.push_back({row[c_hid], {}});
        out[it->second].second.push_back(d);
    }
    return out;
}

}  // namespace holotrack
