#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "holotrack/optics.hpp"
#include "holotrack/segment.hpp"
#include "holotrack/simulate.hpp"
#include "holotrack/tiling.hpp"
#include "holotrack/transforms.hpp"

namespace holotrack {

/// One particle found in one plane. z is the plane's bin centre.
struct Detection {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double d = 0.0;
    int plane_index = 0;
    std::size_t pixel_count = 0;
    /// Highest mask probability inside the component (1 for binary input).
    double score = 1.0;

    Particle position() const { return {x, y, z, d}; }
    friend bool operator==(const Detection&, const Detection&) = default;
};

struct MatchSpec {
    double threshold = 1000.0;  ///< um
    /// Per-axis weights on (x, y, z, d) differences.
    std::array<double, 4> weights{1.0, 1.0, 1.0, 1.0};

    void validate() const;
    friend bool operator==(const MatchSpec&, const MatchSpec&) = default;
};

/// Weighted Euclidean distance in (x, y, z, d).
double particle_distance(const Particle& a, const Particle& b, const std::array<double, 4>& weights = {1, 1, 1, 1});

struct Cluster {
    std::vector<Detection> members;  ///< members[0] is the leader
    Particle centroid;
};

struct ClusteringResult {
    std::vector<Cluster> clusters;     ///< clusters with two or more members
    std::vector<Detection> unassigned;  ///< detections nobody joined

    /// Total particle count M = clusters + unassigned.
    std::size_t particle_count() const { return clusters.size() + unassigned.size(); }
};

/// Connected components of a binary plane mask, one detection each.
/// x, y are the midpoints of the component's extent and d the larger of the
/// two extents, all in um.
std::vector<Detection> extract_particles(const Grid<std::uint8_t>& mask, int plane_index, const OpticalConfig& cfg);

/// Binarizes with prob > threshold and extracts, recording each component's
/// peak probability as its score.
std::vector<Detection> extract_particles(const MaskPlane& plane, const OpticalConfig& cfg, double threshold = 0.5);

/// Single-pass leader clustering. Detections are visited by plane index,
/// keeping the given order within a plane. Each one joins the first existing
/// leader within spec.threshold (distance to the leader, not the centroid)
/// or founds a new cluster. Clusters nobody joined are reported unassigned.
ClusteringResult leader_cluster(std::span<const Detection> dets, const MatchSpec& spec);

struct PredictedParticle {
    Particle p;
    int n_members = 1;
    bool assigned = false;  ///< true when the particle is a cluster centroid
    double score = 1.0;     ///< max member score
};

/// Cluster centroids followed by unassigned detections.
std::vector<PredictedParticle> predicted_particles(const ClusteringResult& result);

class MaskExporter;

struct PipelineOptions {
    TileSpec tile;
    bool dedup_tiles = true;
    MatchSpec match;
    double binarize_threshold = 0.5;
    ValueTransform hologram_transform = ValueTransform::none;
    ValueTransform tile_transform = ValueTransform::none;
    int workers = 1;
    /// Reconstruct every plane even if the segmenter ignores pixels.
    bool always_reconstruct = false;
    /// When set, every tile prediction is also written here.
    MaskExporter* mask_export = nullptr;
};

struct HologramResult {
    std::vector<Detection> detections;  ///< ordered by plane, then raster order
    ClusteringResult clustering;
    std::vector<PredictedParticle> particles;
};

/// Full per-hologram pipeline: normalize, transform, reconstruct each plane
/// centre, tile, segment, reassemble, binarize, extract, cluster. With an
/// empty background the hologram is normalized by its own mean.
HologramResult process_hologram(const IntensityImage& hologram, std::string_view hologram_id,
                                const OpticalConfig& cfg, const Segmenter& segmenter, const PipelineOptions& opts,
                                std::span<const IntensityImage> background = {});

/// Per-plane detections for a normalized hologram; the first half of
/// process_hologram, exposed for threshold sweeps.
std::vector<Detection> detect_planes(const IntensityImage& h_c, std::string_view hologram_id,
                                     const OpticalConfig& cfg, const Segmenter& segmenter,
                                     const PipelineOptions& opts);

/// CSV header `hid,x_um,y_um,z_um,d_um,n_members,assigned`.
void write_predictions_header(std::ostream& out);
void write_predictions(std::ostream& out, std::string_view hologram_id, const std::vector<PredictedParticle>& ps);

/// CSV header `hid,plane,x_um,y_um,z_um,d_um,pixels,score`.
void write_detections_header(std::ostream& out);
void write_detections(std::ostream& out, std::string_view hologram_id, const std::vector<Detection>& dets);
/// Groups detections by hid in order of first appearance.
std::vector<std::pair<std::string, std::vector<Detection>>> read_detections_csv(const std::filesystem::path& path);

}  // namespace holotrack
