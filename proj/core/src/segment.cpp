#include "holotrack/segment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "holotrack/components.hpp"
#include "holotrack/error.hpp"
#include "holotrack/image_io.hpp"

namespace holotrack {

namespace fs = std::filesystem;

Grid<std::uint8_t> MaskPlane::binarize(double threshold) const {
    Grid<std::uint8_t> out(probs.nx(), probs.ny(), 0);
    auto p = probs.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = p[i] > threshold ? 1 : 0;
    return out;
}

OracleSegmenter::OracleSegmenter(ParticleField truth, const OpticalConfig& cfg) : truth_(std::move(truth)), cfg_(cfg) {
    cfg_.validate();
    validate_field(truth_, cfg_);
    for (const auto& p : truth_.particles) by_plane_[plane_index_for_depth(p.z, cfg_)].push_back(p);
}

bool OracleSegmenter::may_detect(std::string_view hologram_id, int plane_index) const {
    return hologram_id != truth_.hologram_id || by_plane_.count(plane_index) != 0;
}

Grid<float> OracleSegmenter::predict(const TileRequest& request) const {
    if (request.hologram_id != truth_.hologram_id) {
        throw DataError("oracle segmenter holds truth for hologram '" + truth_.hologram_id + "', asked for '" +
                        std::string(request.hologram_id) + "'");
    }
    Grid<float> out(request.tile_size, request.tile_size, 0.0f);
    auto it = by_plane_.find(request.plane_index);
    if (it == by_plane_.end()) return out;
    const double ox = request.origin.x0 * cfg_.dx;
    const double oy = request.origin.y0 * cfg_.dy;
    for (const auto& p : it->second) rasterize_disk(out, p.x - ox, p.y - oy, p.d, cfg_.dx, cfg_.dy, 1.0f);
    return out;
}

void FocusParams::validate() const {
    if (!(amp_thresh > 0.0 && amp_thresh < 1.0)) throw ConfigError("focus segmenter: amp_thresh must lie in (0, 1)");
    if (min_px < 1) throw ConfigError("focus segmenter: min_px must be >= 1");
}

FocusSegmenter::FocusSegmenter(FocusParams params) : params_(params) { params_.validate(); }

Grid<float> FocusSegmenter::predict(const TileRequest& request) const {
    if (request.pixels == nullptr) throw DataError("focus segmenter needs tile pixels");
    const auto& tile = *request.pixels;
    std::vector<double> sorted(tile.values().begin(), tile.values().end());
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double cut = params_.amp_thresh * *mid;

    Grid<std::uint8_t> dark(tile.nx(), tile.ny(), 0);
    auto t = tile.values();
    auto d = dark.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = t[i] < cut ? 1 : 0;

    Grid<int> labels;
    const auto comps = label_components(dark, &labels);
    Grid<float> out(tile.nx(), tile.ny(), 0.0f);
    auto l = labels.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (l[i] > 0 && comps[static_cast<std::size_t>(l[i] - 1)].pixel_count >= static_cast<std::size_t>(params_.min_px)) {
            o[i] = 1.0f;
        }
    }
    return out;
}

namespace {
std::string describe(const MaskKey& k) {
    return "hid=" + std::get<0>(k) + ", plane=" + std::to_string(std::get<1>(k)) +
           ", tile_index=" + std::to_string(std::get<2>(k));
}
}  // namespace

ExternalMaskSegmenter::ExternalMaskSegmenter(const fs::path& manifest) : root_(manifest.parent_path()) {
    std::ifstream in(manifest);
    if (!in) throw DataError("cannot open mask manifest " + manifest.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            const auto& hid = rec.at("hid");
            MaskKey key{hid.is_string() ? hid.get<std::string>() : hid.dump(), rec.at("plane").get<int>(),
                        rec.at("tile_index").get<std::size_t>()};
            if (!entries_.emplace(key, rec.at("path").get<std::string>()).second) {
                throw DataError("duplicate entry " + describe(key));
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
        }
    }
}

Grid<float> ExternalMaskSegmenter::predict(const TileRequest& request) const {
    const MaskKey key{std::string(request.hologram_id), request.plane_index, request.tile_index};
    auto it = entries_.find(key);
    if (it == entries_.end()) throw DataError("external masks: no entry for " + describe(key));
    const auto path = root_ / it->second;
    auto ext = path.extension().string();
    Grid<float> probs;
    if (ext == ".pgm" || ext == ".png") {
        const auto g = read_gray(path);
        probs = Grid<float>(g.nx(), g.ny());
        auto src = g.values();
        auto dst = probs.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(src[i] / 255.0);
    } else {
        probs = read_float_raw(path, request.tile_size, request.tile_size);
    }
    if (probs.nx() != request.tile_size || probs.ny() != request.tile_size) {
        throw DataError(path.string() + ": mask is " + std::to_string(probs.nx()) + "x" +
                        std::to_string(probs.ny()) + ", expected " + std::to_string(request.tile_size));
    }
    for (float v : probs.values()) {
        if (!(v >= 0.0f && v <= 1.0f)) throw DataError(path.string() + ": probability outside [0, 1]");
    }
    return probs;
}

MaskExporter::MaskExporter(fs::path out_dir, MaskFormat format) : dir_(std::move(out_dir)), format_(format) {
    fs::create_directories(dir_);
}

void MaskExporter::write(std::string_view hologram_id, int plane_index, std::size_t tile_index,
                         const Grid<float>& probs) {
    const std::string name = std::string(hologram_id) + "_p" + std::to_string(plane_index) + "_t" +
                             std::to_string(tile_index) + (format_ == MaskFormat::pgm ? ".pgm" : ".f32");
    if (format_ == MaskFormat::pgm) {
        Grid<double> scaled = grid_cast<double>(probs);
        write_pgm(dir_ / name, to_gray8(scaled, 255.0));
    } else {
        write_float_raw(dir_ / name, probs, {probs.nx(), probs.ny(), 0.0, "", "probability"});
    }
    nlohmann::json rec = {{"hid", std::string(hologram_id)}, {"plane", plane_index}, {"tile_index", tile_index},
                          {"path", name}};
    std::lock_guard lock(mutex_);
    entries_[{std::string(hologram_id), plane_index, tile_index}] = rec.dump();
}

fs::path MaskExporter::finish() {
    const auto path = dir_ / "manifest.jsonl";
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    std::lock_guard lock(mutex_);
    for (const auto& [key, line] : entries_) out << line << '\n';
    if (!out) throw DataError("write failed: " + path.string());
    return path;
}

}  // namespace holotrack
