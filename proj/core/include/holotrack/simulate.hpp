#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "holotrack/image_io.hpp"
#include "holotrack/optics.hpp"
#include "holotrack/tiling.hpp"
#include "holotrack/transforms.hpp"

namespace holotrack {

/// One spherical particle. x, y are measured from the centre of pixel (0,0);
/// z is the distance from the camera plane. All in micrometres.
struct Particle {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double d = 0.0;

    friend bool operator==(const Particle&, const Particle&) = default;
};

struct ParticleField {
    std::string hologram_id;
    std::vector<Particle> particles;

    friend bool operator==(const ParticleField&, const ParticleField&) = default;
};

/// Gamma-distributed diameters, truncated by rejection to [d_floor, d_cap].
struct GammaSizeDist {
    double shape = 2.0;
    double scale = 10.0;
    double d_floor = 6.0;
    double d_cap = 200.0;

    void validate() const;
    friend bool operator==(const GammaSizeDist&, const GammaSizeDist&) = default;
};

struct SplitSpec {
    int n_train = 100;
    int n_valid = 10;
    int n_test = 10;
    std::uint64_t seed = 0;

    friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

enum class RenderMode { superposition, sequential };

struct RenderOptions {
    RenderMode mode = RenderMode::superposition;
    /// Gray level of the particle-free background.
    double background_level = 127.0;
    friend bool operator==(const RenderOptions&, const RenderOptions&) = default;
};

/// Throws DataError if any particle violates the geometry of cfg.
void validate_field(const ParticleField& field, const OpticalConfig& cfg);

/// Seeds an engine from (master seed, stream index) so per-hologram streams
/// are independent of scheduling.
std::mt19937_64 make_stream_rng(std::uint64_t master_seed, std::uint64_t stream);

ParticleField sample_field(const OpticalConfig& cfg, int n_particles, const GammaSizeDist& dist,
                           std::uint64_t rng_seed, std::string hologram_id = "0");

/// Sets every pixel whose centre lies within d/2 of (x, y) to `value`.
/// Returns the number of pixels touched.
template <class T>
std::size_t rasterize_disk(Grid<T>& grid, double x, double y, double d, double dx, double dy, T value);

/// Unit-amplitude indicator of a particle's cross-section.
Grid<double> disk_indicator(const Particle& p, const OpticalConfig& cfg);

/// Camera-plane field. Scattered fields are expressed relative to the
/// reference wave so the unscattered background is exactly 1.
ComplexField camera_field(const ParticleField& field, const OpticalConfig& cfg, RenderMode mode);

/// 8-bit hologram: background_level * |E_cam|^2, rounded and clipped.
Gray8 render_hologram(const ParticleField& field, const OpticalConfig& cfg, const RenderOptions& opts = {});

struct TruthMask {
    int plane_index = 0;
    double z = 0.0;
    Grid<std::uint8_t> mask;  ///< 1 inside a particle disk, 0 elsewhere
};

/// One binary mask per plane that holds at least one particle, ordered by
/// plane index.
std::vector<TruthMask> render_truth_masks(const ParticleField& field, const OpticalConfig& cfg);

/// Rasterized truth for a single plane restricted to a window. Used by the
/// oracle segmenter and the tile dataset writer.
Grid<std::uint8_t> truth_window(const ParticleField& field, const OpticalConfig& cfg, int plane_index, int x0, int y0,
                                int width, int height);

enum class TileKind { positive, near_focus, random };
const char* to_string(TileKind kind);

struct TileSample {
    std::size_t hologram = 0;  ///< index into the truth list
    int plane_index = 0;
    std::size_t tile_index = 0;
    TileKind kind = TileKind::positive;

    friend bool operator==(const TileSample&, const TileSample&) = default;
};

struct TileDatasetSpec {
    TileSpec tile;
    bool dedup = true;
    int n_negatives = 0;
    double frac_near_focus = 0.5;
    std::uint64_t seed = 0;
    /// When set, every written tile is corrupted and flipped (mask flipped
    /// alongside) with a per-example random stream.
    std::optional<CorruptionSpec> augment;
};

/// Chooses the dataset tiles without rendering anything: one positive per
/// particle, then round(frac * n_negatives) tiles one bin away from an
/// in-focus particle and the rest random particle-free tiles. Throws
/// DataError when there are not enough particle-free tiles.
std::vector<TileSample> plan_tile_dataset(const std::vector<ParticleField>& truths, const OpticalConfig& cfg,
                                          const TileDatasetSpec& spec);

/// Reconstructs the planned tiles from the holograms and writes
/// tile/mask PGM pairs plus `manifest.jsonl` into out_dir. Returns the
/// manifest path.
std::filesystem::path write_tile_dataset(const std::vector<Gray8>& holograms,
                                         const std::vector<ParticleField>& truths, const OpticalConfig& cfg,
                                         const TileDatasetSpec& spec, const std::vector<TileSample>& plan,
                                         const std::filesystem::path& out_dir);

std::filesystem::path make_tile_dataset(const std::vector<Gray8>& holograms, const std::vector<ParticleField>& truths,
                                        const OpticalConfig& cfg, const TileDatasetSpec& spec,
                                        const std::filesystem::path& out_dir);

/// Split label ("train", "valid", "test") per hologram index. Counts must not
/// exceed n_holograms; leftovers go to "train".
std::vector<std::string> assign_splits(int n_holograms, const SplitSpec& spec);

/// CSV with header `hid,x_um,y_um,z_um,d_um`.
void write_particles_csv(std::ostream& out, const std::vector<ParticleField>& fields);
void write_particles_csv(const std::filesystem::path& path, const std::vector<ParticleField>& fields);
/// Groups rows by hid in order of first appearance.
std::vector<ParticleField> read_particles_csv(const std::filesystem::path& path);

}  // namespace holotrack
