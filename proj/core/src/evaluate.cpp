#include "holotrack/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <tuple>

#include "holotrack/csv.hpp"
#include "holotrack/error.hpp"

namespace holotrack {

namespace {

std::optional<double> ratio(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}

double coord(const Particle& p, int i) {
    switch (i) {
        case 0: return p.x;
        case 1: return p.y;
        case 2: return p.z;
        default: return p.d;
    }
}

std::pair<double, double> mean_sd(std::span<const double> v) {
    if (v.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace

PairingResult pair_particles(std::span<const Particle> pred, std::span<const Particle> truth) {
    PairingResult r;
    std::vector<char> taken(truth.size(), 0);
    // Each unmatched prediction keeps an entry for its best truth; entries
    // whose truth has been taken are refreshed when popped.
    using Entry = std::tuple<double, std::size_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    auto best_for = [&](std::size_t p) -> std::optional<Entry> {
        std::optional<Entry> best;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (taken[t]) continue;
            const double d = particle_distance(pred[p], truth[t]);
            if (!best || d < std::get<0>(*best)) best = Entry{d, p, t};
        }
        return best;
    };
    for (std::size_t p = 0; p < pred.size(); ++p) {
        if (auto e = best_for(p)) heap.push(*e);
    }
    std::vector<char> matched(pred.size(), 0);
    std::size_t remaining = truth.size();
    while (!heap.empty() && remaining > 0) {
        const auto [d, p, t] = heap.top();
        heap.pop();
        if (taken[t]) {
            if (auto e = best_for(p)) heap.push(*e);
            continue;
        }
        taken[t] = 1;
        matched[p] = 1;
        --remaining;
        r.pairs.push_back({p, t, d});
    }
    for (std::size_t p = 0; p < pred.size(); ++p) {
        if (!matched[p]) r.unmatched_pred.push_back(p);
    }
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (!taken[t]) r.unmatched_true.push_back(t);
    }
    return r;
}

double smoothed_dice(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DataError("smoothed_dice: length mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()) + ")");
    }
    double inter = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        inter += x[i] * y[i];
        sx += x[i];
        sy += y[i];
    }
    return (2.0 * inter + 1.0) / (sx + sy + 1.0);
}

BinaryMetrics binary_metrics(const Contingency& c) {
    const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
    return {ratio(2.0 * tp, 2.0 * tp + fp + fn), ratio(tp, tp + fn), ratio(fp, tp + fp), ratio(tp, tp + fp + fn)};
}

RocSummary auc_and_max_csi(std::span<const ScoredLabel> items) {
    std::vector<ScoredLabel> sorted(items.begin(), items.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
    long long pos = 0, neg = 0;
    for (const auto& s : sorted) (s.label ? pos : neg)++;

    RocSummary r;
    long long tp = 0, fp = 0;
    double area = 0.0;
    double prev_tpr = 0.0, prev_fpr = 0.0;
    bool have_csi = false;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i].score;
        while (i < sorted.size() && sorted[i].score == t) {
            (sorted[i].label ? tp : fp)++;
            ++i;
        }
        const double den = static_cast<double>(tp + fp + (pos - tp));
        const double csi = den > 0.0 ? static_cast<double>(tp) / den : 0.0;
        if (!have_csi || csi > r.max_csi) {
            r.max_csi = csi;
            r.best_threshold = t;
            have_csi = true;
        }
        if (pos > 0 && neg > 0) {
            const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
            const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
            area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
            prev_tpr = tpr;
            prev_fpr = fpr;
        }
    }
    if (pos > 0 && neg > 0) r.auc = area;
    return r;
}

MatchStats match_stats(const PairingResult& pairing, std::span<const Particle> pred, std::span<const Particle> truth) {
    MatchStats s;
    s.n_pairs = pairing.pairs.size();
    const double n_pairs = static_cast<double>(s.n_pairs);
    s.match_accuracy = ratio(n_pairs, static_cast<double>(truth.size()));
    s.match_f1 = ratio(2.0 * n_pairs, static_cast<double>(truth.size() + pred.size()));
    if (!pairing.pairs.empty()) {
        double sq = 0.0;
        for (const auto& p : pairing.pairs) sq += p.distance * p.distance;
        s.rmse = std::sqrt(sq / n_pairs);
        const auto errors = pair_abs_errors(pairing, pred, truth);
        for (int c = 0; c < 4; ++c) {
            const auto [m, sd] = mean_sd(errors[static_cast<std::size_t>(c)]);
            s.mae[static_cast<std::size_t>(c)] = m;
            s.mae_sd[static_cast<std::size_t>(c)] = sd;
        }
    }
    return s;
}

std::array<std::vector<double>, 4> pair_abs_errors(const PairingResult& pairing, std::span<const Particle> pred,
                                                   std::span<const Particle> truth) {
    std::array<std::vector<double>, 4> out;
    for (const auto& p : pairing.pairs) {
        for (int c = 0; c < 4; ++c) {
            out[static_cast<std::size_t>(c)].push_back(std::abs(coord(pred[p.pred], c) - coord(truth[p.truth], c)));
        }
    }
    return out;
}

Contingency detection_contingency(const PairingResult& pairing, std::size_t n_pred, std::size_t n_true,
                                  double threshold) {
    Contingency c;
    for (const auto& p : pairing.pairs) {
        if (p.distance <= threshold) ++c.tp;
    }
    c.fp = static_cast<long long>(n_pred) - c.tp;
    c.fn = static_cast<long long>(n_true) - c.tp;
    return c;
}

Contingency mask_contingency(std::span<const float> probs, std::span<const std::uint8_t> truth, double threshold) {
    if (probs.size() != truth.size()) throw DataError("mask_contingency: size mismatch");
    Contingency c;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool p = probs[i] > threshold;
        const bool t = truth[i] != 0;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

MetricReport evaluate_hologram(const std::string& hid, std::span<const Particle> pred, std::span<const Particle> truth,
                               double match_threshold, std::span<const double> pred_scores) {
    MetricReport r;
    r.hid = hid;
    r.n_true = truth.size();
    r.n_pred = pred.size();
    const auto pairing = pair_particles(pred, truth);
    r.match = match_stats(pairing, pred, truth);
    r.binary = binary_metrics(detection_contingency(pairing, pred.size(), truth.size(), match_threshold));
    if (!pred_scores.empty()) {
        if (pred_scores.size() != pred.size()) throw DataError("evaluate: one score per prediction required");
        std::vector<ScoredLabel> items(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) items[i].score = pred_scores[i];
        for (const auto& p : pairing.pairs) items[p.pred].label = p.distance <= match_threshold;
        r.auc = auc_and_max_csi(items).auc;
    }
    return r;
}

MetricReport mean_report(std::span<const MetricReport> reports) {
    MetricReport m;
    m.hid = "mean";
    if (reports.empty()) return m;
    auto avg = [&](auto getter) -> std::optional<double> {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : reports) {
            if (auto v = getter(r)) {
                sum += *v;
                ++n;
            }
        }
        return n ? std::optional<double>(sum / n) : std::nullopt;
    };
    double nt = 0.0, np = 0.0, pairs = 0.0;
    for (const auto& r : reports) {
        nt += static_cast<double>(r.n_true);
        np += static_cast<double>(r.n_pred);
        pairs += static_cast<double>(r.match.n_pairs);
    }
    const double n = static_cast<double>(reports.size());
    m.n_true = static_cast<std::size_t>(std::lround(nt / n));
    m.n_pred = static_cast<std::size_t>(std::lround(np / n));
    m.match.n_pairs = static_cast<std::size_t>(std::lround(pairs / n));
    m.binary.f1 = avg([](const MetricReport& r) { return r.binary.f1; });
    m.binary.pod = avg([](const MetricReport& r) { return r.binary.pod; });
    m.binary.far = avg([](const MetricReport& r) { return r.binary.far; });
    m.binary.csi = avg([](const MetricReport& r) { return r.binary.csi; });
    m.auc = avg([](const MetricReport& r) { return r.auc; });
    m.match.match_accuracy = avg([](const MetricReport& r) { return r.match.match_accuracy; });
    m.match.match_f1 = avg([](const MetricReport& r) { return r.match.match_f1; });
    m.match.rmse = avg([](const MetricReport& r) { return r.match.rmse; });
    for (std::size_t c = 0; c < 4; ++c) {
        m.match.mae[c] = avg([c](const MetricReport& r) { return r.match.mae[c]; });
        m.match.mae_sd[c] = avg([c](const MetricReport& r) { return r.match.mae_sd[c]; });
    }
    return m;
}

void write_metric_reports(std::ostream& out, std::span<const MetricReport> reports) {
    using csv::format_optional;
    out << "hid,n_true,n_pred,n_pairs,f1,auc,pod,far,csi,match_accuracy,match_f1,rmse_um,mae_x_um,mae_y_um,"
           "mae_z_um,mae_d_um\n";
    for (const auto& r : reports) {
        out << r.hid << ',' << r.n_true << ',' << r.n_pred << ',' << r.match.n_pairs << ','
            << format_optional(r.binary.f1) << ',' << format_optional(r.auc) << ',' << format_optional(r.binary.pod)
            << ',' << format_optional(r.binary.far) << ',' << format_optional(r.binary.csi) << ','
            << format_optional(r.match.match_accuracy) << ',' << format_optional(r.match.match_f1) << ','
            << format_optional(r.match.rmse);
        for (const auto& v : r.match.mae) out << ',' << format_optional(v);
        out << '\n';
    }
}

void write_error_table(std::ostream& out, std::span<const MetricReport> reports,
                       const std::vector<std::array<std::vector<double>, 4>>& abs_errors) {
    static const char* names[4] = {"x", "y", "z", "d"};
    out << "coordinate,mean_abs_error_um,sd_abs_error_um\n";
    for (std::size_t c = 0; c < 4; ++c) {
        std::vector<double> pooled;
        for (const auto& h : abs_errors) pooled.insert(pooled.end(), h[c].begin(), h[c].end());
        if (pooled.empty()) {
            out << names[c] << ",,\n";
            continue;
        }
        const auto [m, sd] = mean_sd(pooled);
        out << names[c] << ',' << csv::format_number(m) << ',' << csv::format_number(sd) << '\n';
    }
    std::vector<double> rmses;
    for (const auto& r : reports) {
        if (r.match.rmse) rmses.push_back(*r.match.rmse);
    }
    if (rmses.empty()) {
        out << "RMSE,,\n";
    } else {
        const auto [m, sd] = mean_sd(rmses);
        out << "RMSE," << csv::format_number(m) << ',' << csv::format_number(sd) << '\n';
    }
}

std::vector<SweepRow> threshold_sweep(std::span<const Detection> detections, std::span<const Particle> truth,
                                      std::span<const double> thresholds, const std::array<double, 4>& weights) {
    if (thresholds.empty()) throw ConfigError("threshold sweep: empty threshold list");
    std::vector<SweepRow> rows;
    rows.reserve(thresholds.size());
    for (double t : thresholds) {
        MatchSpec spec{t, weights};
        const auto clustering = leader_cluster(detections, spec);
        const auto predicted = predicted_particles(clustering);
        std::vector<Particle> pred;
        pred.reserve(predicted.size());
        for (const auto& p : predicted) pred.push_back(p.p);
        const auto pairing = pair_particles(pred, truth);
        const auto stats = match_stats(pairing, pred, truth);
        rows.push_back({t, clustering.clusters.size(), clustering.unassigned.size(), clustering.particle_count(),
                        stats.match_accuracy, stats.match_f1, stats.rmse});
    }
    return rows;
}

std::vector<SweepRow> mean_sweep(const std::vector<std::vector<SweepRow>>& per_hologram) {
    if (per_hologram.empty()) return {};
    const auto n_rows = per_hologram.front().size();
    std::vector<SweepRow> out(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        double clusters = 0, unassigned = 0, m = 0;
        double acc = 0, f1 = 0, rmse = 0;
        int n_acc = 0, n_f1 = 0, n_rmse = 0;
        for (const auto& table : per_hologram) {
            if (table.size() != n_rows) throw DataError("mean_sweep: tables have different lengths");
            const auto& r = table[i];
            out[i].threshold = r.threshold;
            clusters += static_cast<double>(r.n_clusters);
            unassigned += static_cast<double>(r.n_unassigned);
            m += static_cast<double>(r.particle_count);
            if (r.match_accuracy) acc += *r.match_accuracy, ++n_acc;
            if (r.match_f1) f1 += *r.match_f1, ++n_f1;
            if (r.rmse) rmse += *r.rmse, ++n_rmse;
        }
        const double n = static_cast<double>(per_hologram.size());
        out[i].n_clusters = static_cast<std::size_t>(std::lround(clusters / n));
        out[i].n_unassigned = static_cast<std::size_t>(std::lround(unassigned / n));
        out[i].particle_count = static_cast<std::size_t>(std::lround(m / n));
        if (n_acc) out[i].match_accuracy = acc / n_acc;
        if (n_f1) out[i].match_f1 = f1 / n_f1;
        if (n_rmse) out[i].rmse = rmse / n_rmse;
    }
    return out;
}

void write_sweep_header(std::ostream& out) {
    out << "hid,threshold_um,n_clusters,n_unassigned,M,match_accuracy,match_f1,rmse_um\n";
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows, const std::string& hid) {
    for (const auto& r : rows) {
        out << hid << ',' << csv::format_number(r.threshold) << ',' << r.n_clusters << ',' << r.n_unassigned << ','
            << r.particle_count << ',' << csv::format_optional(r.match_accuracy) << ','
            << csv::format_optional(r.match_f1) << ',' << csv::format_optional(r.rmse) << '\n';
    }
}

std::vector<double> log_thresholds(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ConfigError("log_thresholds: need 0 < lo < hi and count >= 2");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> histogram_counts(std::span<const Particle> ps, const HistogramAxis& axis, int coordinate) {
    if (axis.bins < 1 || !(axis.hi > axis.lo)) throw ConfigError("histogram axis " + axis.name + " is invalid");
    std::vector<double> counts(static_cast<std::size_t>(axis.bins), 0.0);
    const double width = (axis.hi - axis.lo) / axis.bins;
    for (const auto& p : ps) {
        const double v = coord(p, coordinate);
        const int b = std::clamp(static_cast<int>(std::floor((v - axis.lo) / width)), 0, axis.bins - 1);
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    return counts;
}

std::vector<HistogramTable> emit_histograms(const std::vector<std::vector<Particle>>& pred,
                                            const std::vector<std::vector<Particle>>& truth,
                                            const std::array<HistogramAxis, 4>& axes) {
    if (pred.size() != truth.size()) throw DataError("histograms: prediction and truth hologram counts differ");
    std::vector<HistogramTable> out;
    for (int c = 0; c < 4; ++c) {
        HistogramTable t;
        t.axis = axes[static_cast<std::size_t>(c)];
        for (std::size_t h = 0; h < pred.size(); ++h) {
            t.pred_counts.push_back(histogram_counts(pred[h], t.axis, c));
            t.true_counts.push_back(histogram_counts(truth[h], t.axis, c));
        }
        const auto bins = static_cast<std::size_t>(t.axis.bins);
        auto summarize = [&](const std::vector<std::vector<double>>& counts, std::vector<double>& mean,
                             std::vector<double>& sd) {
            mean.assign(bins, 0.0);
            sd.assign(bins, 0.0);
            for (std::size_t b = 0; b < bins; ++b) {
                std::vector<double> col;
                for (const auto& h : counts) col.push_back(h[b]);
                std::tie(mean[b], sd[b]) = mean_sd(col);
            }
        };
        summarize(t.pred_counts, t.pred_mean, t.pred_sd);
        summarize(t.true_counts, t.true_mean, t.true_sd);
        out.push_back(std::move(t));
    }
    return out;
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramTable> tables) {
    out << "coordinate,bin_lo,bin_hi,pred_mean,pred_sd,true_mean,true_sd\n";
    for (const auto& t : tables) {
        const double width = (t.axis.hi - t.axis.lo) / t.axis.bins;
        for (std::size_t b = 0; b < t.pred_mean.size(); ++b) {
            out << t.axis.name << ',' << csv::format_number(t.axis.lo + width * static_cast<double>(b)) << ','
                << csv::format_number(t.axis.lo + width * static_cast<double>(b + 1)) << ','
                << csv::format_number(t.pred_mean[b]) << ',' << csv::format_number(t.pred_sd[b]) << ','
                << csv::format_number(t.true_mean[b]) << ',' << csv::format_number(t.true_sd[b]) << '\n';
        }
    }
}

void write_histogram_svg(std::ostream& out, const HistogramTable& t) {
    const double W = 640, H = 360, left = 50, right = 10, top = 20, bottom = 40;
    const std::size_t bins = t.pred_mean.size();
    double ymax = 1.0;
    for (std::size_t b = 0; b < bins; ++b) {
        ymax = std::max({ymax, t.pred_mean[b] + t.pred_sd[b], t.true_mean[b] + t.true_sd[b]});
    }
    const double plot_w = W - left - right, plot_h = H - top - bottom;
    const double slot = plot_w / static_cast<double>(std::max<std::size_t>(bins, 1));
    auto ypix = [&](double v) { return top + plot_h * (1.0 - v / ymax); };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t b = 0; b < bins; ++b) {
        const double x0 = left + slot * static_cast<double>(b);
        const double bw = slot * 0.4;
        const double tx = x0 + slot * 0.1, px = x0 + slot * 0.5;
        out << "<rect x=\"" << tx << "\" y=\"" << ypix(t.true_mean[b]) << "\" width=\"" << bw << "\" height=\""
            << plot_h + top - ypix(t.true_mean[b]) << "\" fill=\"#f28e2b\"/>\n";
        out << "<rect x=\"" << px << "\" y=\"" << ypix(t.pred_mean[b]) << "\" width=\"" << bw << "\" height=\""
            << plot_h + top - ypix(t.pred_mean[b]) << "\" fill=\"none\" stroke=\"#4e79a7\"/>\n";
        const double cx = px + bw / 2;
        out << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << ypix(t.pred_mean[b] + t.pred_sd[b])
            << "\" y2=\"" << ypix(std::max(0.0, t.pred_mean[b] - t.pred_sd[b])) << "\" stroke=\"#4e79a7\"/>\n";
    }
    out << "<line x1=\"" << left << "\" x2=\"" << W - right << "\" y1=\"" << top + plot_h << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"14\">" << t.axis.name
        << " [" << t.axis.lo << ", " << t.axis.hi << "]</text>\n";
    out << "<text x=\"5\" y=\"" << top + 10 << "\" font-size=\"12\">max " << ymax << "</text>\n";
    out << "</svg>\n";
}

}  // namespace holotrack
