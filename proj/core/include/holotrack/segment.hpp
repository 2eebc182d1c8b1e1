#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "holotrack/optics.hpp"
#include "holotrack/simulate.hpp"
#include "holotrack/tiling.hpp"

namespace holotrack {

/// Full-size per-pixel in-focus probability for one reconstructed plane.
struct MaskPlane {
    int plane_index = 0;
    double z = 0.0;
    Grid<float> probs;

    /// Pixels with probability strictly greater than threshold become 1.
    Grid<std::uint8_t> binarize(double threshold = 0.5) const;
};

/// Everything a segmenter may look at for one tile.
struct TileRequest {
    std::string_view hologram_id;
    int plane_index = 0;
    double z = 0.0;
    std::size_t tile_index = 0;
    TileOrigin origin;
    int tile_size = 0;
    /// Value-transformed tile pixels; null when the segmenter does not use them.
    const Grid<double>* pixels = nullptr;
};

/// Per-tile mask predictor. Implementations are read-only after
/// construction and may be called concurrently.
class Segmenter {
public:
    virtual ~Segmenter() = default;

    /// Returns a tile_size x tile_size map with values in [0, 1].
    virtual Grid<float> predict(const TileRequest& request) const = 0;

    /// False lets the pipeline skip reconstructing planes.
    virtual bool needs_pixels() const { return true; }

    /// False promises predict() would return all zeros for every tile of the
    /// plane, letting the pipeline skip it.
    virtual bool may_detect(std::string_view /*hologram_id*/, int /*plane_index*/) const { return true; }
};

/// Serves the rasterized truth masks: 1 inside disks of particles whose z-bin
/// is the requested plane, 0 elsewhere.
class OracleSegmenter final : public Segmenter {
public:
    OracleSegmenter(ParticleField truth, const OpticalConfig& cfg);

    Grid<float> predict(const TileRequest& request) const override;
    bool needs_pixels() const override { return false; }
    bool may_detect(std::string_view hologram_id, int plane_index) const override;

private:
    ParticleField truth_;
    OpticalConfig cfg_;
    std::map<int, std::vector<Particle>> by_plane_;
};

struct FocusParams {
    double amp_thresh = 0.55;  ///< fraction of the tile median
    int min_px = 4;

    void validate() const;
    friend bool operator==(const FocusParams&, const FocusParams&) = default;
};

/// Classical baseline: marks pixels darker than amp_thresh * tile median that
/// belong to a 4-connected component of at least min_px pixels. Expects
/// non-negative amplitude tiles.
class FocusSegmenter final : public Segmenter {
public:
    explicit FocusSegmenter(FocusParams params = {});
    Grid<float> predict(const TileRequest& request) const override;

private:
    FocusParams params_;
};

/// Key of one stored mask: hologram id, plane index, tile index.
using MaskKey = std::tuple<std::string, int, std::size_t>;

/// Serves probability maps produced out of process. The manifest is
/// line-delimited JSON `{"hid", "plane", "tile_index", "path"}` with paths
/// relative to the manifest's directory. PGM masks map gray g to g / 255;
/// `.f32`/`.raw` files hold little-endian float32 probabilities.
class ExternalMaskSegmenter final : public Segmenter {
public:
    explicit ExternalMaskSegmenter(const std::filesystem::path& manifest);

    Grid<float> predict(const TileRequest& request) const override;
    bool needs_pixels() const override { return false; }

    std::size_t size() const { return entries_.size(); }

private:
    std::filesystem::path root_;
    std::map<MaskKey, std::filesystem::path> entries_;
};

enum class MaskFormat { pgm, f32 };

/// Thread-safe writer for the external-mask exchange format. The manifest is
/// written sorted by key on finish() so output is independent of call order.
class MaskExporter {
public:
    MaskExporter(std::filesystem::path out_dir, MaskFormat format);
    void write(std::string_view hologram_id, int plane_index, std::size_t tile_index, const Grid<float>& probs);
    std::filesystem::path finish();

private:
    std::filesystem::path dir_;
    MaskFormat format_;
    std::mutex mutex_;
    std::map<MaskKey, std::string> entries_;
};

}  // namespace holotrack
