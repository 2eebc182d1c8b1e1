#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holotrack/detect3d.hpp"
#include "holotrack/simulate.hpp"

namespace holotrack {

struct MatchedPair {
    std::size_t pred = 0;   ///< index into the predicted list
    std::size_t truth = 0;  ///< index into the true list
    double distance = 0.0;  ///< 4-D (x, y, z, d) distance, um

    friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct PairingResult {
    std::vector<MatchedPair> pairs;  ///< in selection order (non-decreasing distance)
    std::vector<std::size_t> unmatched_pred;
    std::vector<std::size_t> unmatched_true;
};

/// Greedy global pairing: repeatedly take the closest remaining
/// (pred, truth) pair, ties broken by (pred index, truth index), until one
/// side runs out.
PairingResult pair_particles(std::span<const Particle> pred, std::span<const Particle> truth);

/// (2 sum x*y + 1) / (sum x + sum y + 1). Throws DataError on length mismatch.
double smoothed_dice(std::span<const double> x, std::span<const double> y);

struct Contingency {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;
};

/// Undefined values (zero denominators) are std::nullopt.
struct BinaryMetrics {
    std::optional<double> f1;
    std::optional<double> pod;
    std::optional<double> far;
    std::optional<double> csi;
};

BinaryMetrics binary_metrics(const Contingency& c);

struct ScoredLabel {
    double score = 0.0;
    bool label = false;
};

struct RocSummary {
    std::optional<double> auc;  ///< undefined unless both classes are present
    double max_csi = 0.0;
    double best_threshold = 0.0;  ///< items with score >= this are positive
};

/// Sweeps every distinct score as a threshold (score >= t is positive).
/// AUC is the trapezoidal area under the resulting ROC curve.
RocSummary auc_and_max_csi(std::span<const ScoredLabel> items);

struct MatchStats {
    std::size_t n_pairs = 0;
    std::optional<double> match_accuracy;  ///< pairs / n_true
    std::optional<double> match_f1;        ///< 2 pairs / (n_true + n_pred)
    std::optional<double> rmse;            ///< sqrt(mean squared 4-D pair distance)
    std::array<std::optional<double>, 4> mae{};     ///< mean |error| per (x, y, z, d)
    std::array<std::optional<double>, 4> mae_sd{};  ///< population sd of |error|
};

MatchStats match_stats(const PairingResult& pairing, std::span<const Particle> pred, std::span<const Particle> truth);

/// Particle-level contingency: pairs within `threshold` are hits, the rest of
/// the predictions false alarms, the rest of the truths misses.
Contingency detection_contingency(const PairingResult& pairing, std::size_t n_pred, std::size_t n_true,
                                  double threshold);

/// Pixel-level contingency of a probability plane against a binary truth.
Contingency mask_contingency(std::span<const float> probs, std::span<const std::uint8_t> truth, double threshold = 0.5);

/// Per-hologram evaluation row: detection scores plus match statistics.
struct MetricReport {
    std::string hid;
    std::size_t n_true = 0;
    std::size_t n_pred = 0;
    BinaryMetrics binary;
    std::optional<double> auc;
    MatchStats match;
};

MetricReport evaluate_hologram(const std::string& hid, std::span<const Particle> pred, std::span<const Particle> truth,
                               double match_threshold, std::span<const double> pred_scores = {});

/// Column-wise mean over holograms; undefined cells are skipped.
MetricReport mean_report(std::span<const MetricReport> reports);

void write_metric_reports(std::ostream& out, std::span<const MetricReport> reports);

/// Pooled absolute coordinate errors over all pairs, one row per coordinate
/// (coordinate, mean, sd); the last row is RMSE with the sd across holograms.
void write_error_table(std::ostream& out, std::span<const MetricReport> reports,
                       const std::vector<std::array<std::vector<double>, 4>>& abs_errors);

/// Absolute (x, y, z, d) errors of every pair.
std::array<std::vector<double>, 4> pair_abs_errors(const PairingResult& pairing, std::span<const Particle> pred,
                                                   std::span<const Particle> truth);

struct SweepRow {
    double threshold = 0.0;
    std::size_t n_clusters = 0;
    std::size_t n_unassigned = 0;
    std::size_t particle_count = 0;  ///< M
    std::optional<double> match_accuracy;
    std::optional<double> match_f1;
    std::optional<double> rmse;
};

/// Re-clusters the detections at each threshold and scores against truth.
std::vector<SweepRow> threshold_sweep(std::span<const Detection> detections, std::span<const Particle> truth,
                                      std::span<const double> thresholds,
                                      const std::array<double, 4>& weights = {1, 1, 1, 1});

/// Row-wise mean over holograms (same threshold list in every table).
std::vector<SweepRow> mean_sweep(const std::vector<std::vector<SweepRow>>& per_hologram);

/// Header `hid,threshold_um,n_clusters,n_unassigned,M,match_accuracy,match_f1,rmse_um`.
void write_sweep_header(std::ostream& out);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows, const std::string& hid = "");

/// Log-spaced thresholds, inclusive of both ends.
std::vector<double> log_thresholds(double lo, double hi, int count);

struct HistogramAxis {
    std::string name;  ///< x, y, z or d
    double lo = 0.0;
    double hi = 1.0;
    int bins = 20;
};

struct HistogramTable {
    HistogramAxis axis;
    std::vector<double> pred_mean, pred_sd, true_mean, true_sd;
    std::vector<std::vector<double>> pred_counts;  ///< [hologram][bin]
    std::vector<std::vector<double>> true_counts;
};

/// Bin counts clamp out-of-range values into the edge bins.
std::vector<double> histogram_counts(std::span<const Particle> ps, const HistogramAxis& axis, int coordinate);

/// One table per coordinate (x, y, z, d): per-hologram counts and per-bin
/// mean and population sd across holograms.
std::vector<HistogramTable> emit_histograms(const std::vector<std::vector<Particle>>& pred,
                                            const std::vector<std::vector<Particle>>& truth,
                                            const std::array<HistogramAxis, 4>& axes);

void write_histogram_csv(std::ostream& out, std::span<const HistogramTable> tables);
/// Grouped bar chart (predicted vs true means with sd whiskers).
void write_histogram_svg(std::ostream& out, const HistogramTable& table);

}  // namespace holotrack
