#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "holotrack/detect3d.hpp"
#include "holotrack/optics.hpp"
#include "holotrack/segment.hpp"
#include "holotrack/simulate.hpp"
#include "holotrack/tiling.hpp"
#include "holotrack/transforms.hpp"

namespace holotrack {

/// Environment variable naming the default configuration file.
inline constexpr const char* kConfigEnvVar = "HOLOTRACK_CONFIG";

enum class SegmenterKind { oracle, focus, external };
std::string_view to_string(SegmenterKind k);
SegmenterKind parse_segmenter_kind(std::string_view name);

/// Every tunable of the pipeline. Defaults reproduce the reference
/// instrument: 512/128 tiles, 1000 planes, 1000 um match threshold and 0.5
/// binarization.
struct PipelineConfig {
    OpticalConfig optics;

    TileSpec tile;
    bool dedup_tiles = true;

    MatchSpec match;
    double binarize_threshold = 0.5;

    SegmenterKind segmenter = SegmenterKind::oracle;
    FocusParams focus;
    std::string mask_manifest;  ///< external segmenter
    std::string truth_csv;      ///< oracle segmenter

    ValueTransform hologram_transform = ValueTransform::none;
    ValueTransform tile_transform = ValueTransform::none;
    CorruptionSpec corruption;

    int n_particles = 500;
    GammaSizeDist sizes;
    RenderOptions render;
    SplitSpec split;
    int n_negatives = 0;
    double frac_near_focus = 0.5;

    int workers = 1;
    std::uint64_t seed = 0;

    /// Throws ConfigError on any invalid field.
    void validate() const;

    PipelineOptions pipeline_options() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Parses the TOML subset used by config files: `[section]` headers and
/// `key = value` lines with strings, integers, floats and booleans. Unknown
/// sections or keys raise ConfigError.
PipelineConfig parse_config(std::string_view toml);
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies one `section.key=value` override (value in TOML syntax; bare
/// words are accepted as strings). The result is not validated so several
/// overrides can be chained; call validate() afterwards.
void apply_override(PipelineConfig& cfg, std::string_view assignment);

/// Canonical TOML serialization; parse_config(to_toml(c)) == c.
std::string to_toml(const PipelineConfig& cfg);

/// 16 hex digits of FNV-1a over to_toml(cfg).
std::string config_hash(const PipelineConfig& cfg);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace holotrack
