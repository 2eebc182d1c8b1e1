#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "holotrack/config.hpp"
#include "holotrack/csv.hpp"
#include "holotrack/detect3d.hpp"
#include "holotrack/error.hpp"
#include "holotrack/evaluate.hpp"
#include "holotrack/image_io.hpp"
#include "holotrack/optics.hpp"
#include "holotrack/parallel.hpp"
#include "holotrack/segment.hpp"
#include "holotrack/simulate.hpp"

namespace holotrack::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    int workers = 0;
};

PipelineConfig resolve_config(const Common& c) {
    PipelineConfig cfg;
    std::string path = c.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') path = env;
    }
    if (!path.empty()) cfg = load_config(path);
    for (const auto& o : c.overrides) apply_override(cfg, o);
    if (c.workers > 0) cfg.workers = c.workers;
    cfg.validate();
    return cfg;
}

void require_exists(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw DataError(what + " not found: " + p.string());
}

std::string hologram_id_from_path(const fs::path& p) {
    const auto stem = p.stem().string();
    constexpr std::string_view prefix = "synthetic_";
    if (stem.size() > prefix.size() && stem.starts_with(prefix)) return stem.substr(prefix.size());
    return stem;
}

std::string padded_id(std::size_t i) {
    std::ostringstream s;
    s << std::setw(4) << std::setfill('0') << i;
    return s.str();
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream o(p, std::ios::binary);
    if (!o) throw DataError("cannot write " + p.string());
    return o;
}

/// Writes to a file, or to `fallback` when the path is empty or "-".
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty() && path != "-") {
            file_ = open_out(path);
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

    void close() {
        if (file_.is_open()) {
            file_.close();
            if (!file_) throw DataError("write failed");
        }
    }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

IntensityImage load_hologram(const fs::path& path, const OpticalConfig& cfg) {
    const auto img = read_gray(path);
    if (img.nx() != cfg.nx || img.ny() != cfg.ny) {
        throw DataError(path.string() + ": image is " + std::to_string(img.nx()) + "x" + std::to_string(img.ny()) +
                        " but the configured sensor is " + std::to_string(cfg.nx) + "x" + std::to_string(cfg.ny));
    }
    return grid_cast<double>(img);
}

std::vector<IntensityImage> load_backgrounds(const std::vector<std::string>& paths, const OpticalConfig& cfg) {
    std::vector<IntensityImage> out;
    for (const auto& p : paths) {
        require_exists(p, "background image");
        out.push_back(load_hologram(p, cfg));
    }
    return out;
}

std::vector<double> parse_thresholds(const std::string& spec) {
    // lo:hi:count, log spaced
    const auto a = spec.find(':');
    const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
        throw ConfigError("thresholds must look like lo:hi:count, got '" + spec + "'");
    }
    try {
        const double lo = std::stod(spec.substr(0, a));
        const double hi = std::stod(spec.substr(a + 1, b - a - 1));
        const int n = std::stoi(spec.substr(b + 1));
        if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw ConfigError("thresholds need 0 < lo <= hi and count >= 1");
        return log_thresholds(lo, hi, n);
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse thresholds '" + spec + "'");
    }
}

std::map<std::string, const ParticleField*> index_fields(const std::vector<ParticleField>& fields) {
    std::map<std::string, const ParticleField*> m;
    for (const auto& f : fields) m[f.hologram_id] = &f;
    return m;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string out = "synthetic";
    int n_holograms = -1;
    int n_particles = -1;
    bool tiles = false;
    bool augment = false;
};

int cmd_simulate(const PipelineConfig& cfg, const SimulateArgs& a, std::ostream& out) {
    const int n = a.n_holograms >= 0 ? a.n_holograms : cfg.split.n_train + cfg.split.n_valid + cfg.split.n_test;
    const int np = a.n_particles >= 0 ? a.n_particles : cfg.n_particles;
    if (n < 0 || np < 0) throw ConfigError("hologram and particle counts must be >= 0");
    const fs::path dir = a.out;
    fs::create_directories(dir);

    std::vector<ParticleField> fields(static_cast<std::size_t>(n));
    std::vector<Gray8> kept(a.tiles ? static_cast<std::size_t>(n) : 0);
    parallel_for(static_cast<std::size_t>(n), cfg.workers, [&](std::size_t i, int) {
        auto rng = make_stream_rng(cfg.seed, i);
        fields[i] = sample_field(cfg.optics, np, cfg.sizes, rng(), padded_id(i));
        auto img = render_hologram(fields[i], cfg.optics, cfg.render);
        write_png(dir / ("synthetic_" + fields[i].hologram_id + ".png"), img);
        if (a.tiles) kept[i] = std::move(img);
    });

    write_particles_csv(dir / "particles.csv", fields);

    SplitSpec split = cfg.split;
    split.seed = cfg.seed;
    split.n_valid = std::min(split.n_valid, n);
    split.n_test = std::min(split.n_test, n - split.n_valid);
    split.n_train = n - split.n_valid - split.n_test;
    const auto labels = assign_splits(n, split);
    {
        auto s = open_out(dir / "splits.csv");
        s << "hid,split\n";
        for (std::size_t i = 0; i < labels.size(); ++i) s << fields[i].hologram_id << ',' << labels[i] << '\n';
    }
    {
        auto s = open_out(dir / "config.toml");
        s << to_toml(cfg);
    }
    if (a.tiles) {
        TileDatasetSpec ts;
        ts.tile = cfg.tile;
        ts.dedup = cfg.dedup_tiles;
        ts.n_negatives = cfg.n_negatives;
        ts.frac_near_focus = cfg.frac_near_focus;
        ts.seed = cfg.seed;
        if (a.augment) ts.augment = cfg.corruption;
        const auto manifest = make_tile_dataset(kept, fields, cfg.optics, ts, dir / "tiles");
        out << "tile manifest: " << manifest.string() << '\n';
    }
    out << "wrote " << n << " holograms with " << static_cast<long long>(n) * np << " particles to " << dir.string()
        << '\n';
    return 0;
}

// ------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string hologram;
    std::vector<double> z;
    std::vector<int> planes;
    std::vector<std::string> background;
    std::string out = "planes";
    bool preview = false;
};

int cmd_reconstruct(const PipelineConfig& cfg, const ReconstructArgs& a, std::ostream& out) {
    require_exists(a.hologram, "hologram");
    if (a.z.empty() && a.planes.empty()) throw ConfigError("reconstruct needs at least one --z or --plane");
    const auto raw = load_hologram(a.hologram, cfg.optics);
    const auto bg = load_backgrounds(a.background, cfg.optics);
    auto h_c = bg.empty() ? normalize_by_mean(raw) : normalize_background(raw, bg);
    h_c = apply_value_transform(h_c, cfg.hologram_transform);

    const auto centers = plane_centers(cfg.optics);
    std::vector<std::pair<std::string, double>> jobs;
    for (int p : a.planes) {
        if (p < 0 || p >= cfg.optics.n_planes) throw ConfigError("plane index out of range: " + std::to_string(p));
        std::ostringstream name;
        name << 'p' << std::setw(4) << std::setfill('0') << p;
        jobs.emplace_back(name.str(), centers[static_cast<std::size_t>(p)]);
    }
    for (double z : a.z) jobs.emplace_back("z" + csv::format_number(z), z);

    const fs::path dir = a.out;
    fs::create_directories(dir);
    const auto hid = hologram_id_from_path(a.hologram);
    const auto hash = config_hash(cfg);
    const Refocuser refocus(h_c, cfg.optics);
    auto ws = refocus.make_workspace();
    for (const auto& [tag, z] : jobs) {
        const auto amp = refocus.reconstruct(z, ws);
        const auto base = dir / (hid + "_" + tag);
        write_float_raw(fs::path(base.string() + ".f32"), grid_cast<float>(amp),
                        RawHeader{amp.nx(), amp.ny(), z, hash, "amplitude"});
        if (a.preview) write_pgm(fs::path(base.string() + ".pgm"), to_gray8(amp, 127.0));
        out << base.string() << ".f32 z=" << csv::format_number(z) << '\n';
    }
    return 0;
}

// ----------------------------------------------------------------- process

struct ProcessArgs {
    std::vector<std::string> holograms;
    std::string out = "-";
    std::string detections;
    std::string export_masks;
    std::string mask_format = "pgm";
    std::string truth;
    std::string manifest;
    std::vector<std::string> background;
};

int cmd_process(PipelineConfig cfg, const ProcessArgs& a, std::ostream& out) {
    if (!a.truth.empty()) cfg.truth_csv = a.truth;
    if (!a.manifest.empty()) cfg.mask_manifest = a.manifest;

    Sink pred(a.out, out);
    write_predictions_header(*pred);
    std::optional<Sink> dets;
    if (!a.detections.empty()) {
        dets.emplace(a.detections, out);
        write_detections_header(**dets);
    }
    if (a.holograms.empty()) {
        pred.close();
        if (dets) dets->close();
        return 0;
    }

    for (const auto& h : a.holograms) require_exists(h, "hologram");
    std::vector<ParticleField> truth;
    std::unique_ptr<Segmenter> shared;
    switch (cfg.segmenter) {
        case SegmenterKind::oracle:
            if (cfg.truth_csv.empty()) throw ConfigError("the oracle segmenter needs segmenter.truth_csv or --truth");
            require_exists(cfg.truth_csv, "truth CSV");
            truth = read_particles_csv(cfg.truth_csv);
            break;
        case SegmenterKind::focus:
            shared = std::make_unique<FocusSegmenter>(cfg.focus);
            break;
        case SegmenterKind::external:
            if (cfg.mask_manifest.empty()) {
                throw ConfigError("the external segmenter needs segmenter.manifest or --manifest");
            }
            require_exists(cfg.mask_manifest, "mask manifest");
            shared = std::make_unique<ExternalMaskSegmenter>(cfg.mask_manifest);
            break;
    }
    const auto truth_by_id = index_fields(truth);
    const auto bg = load_backgrounds(a.background, cfg.optics);

    std::unique_ptr<MaskExporter> exporter;
    auto opts = cfg.pipeline_options();
    if (!a.export_masks.empty()) {
        MaskFormat fmt = MaskFormat::pgm;
        if (a.mask_format == "f32") fmt = MaskFormat::f32;
        else if (a.mask_format != "pgm") throw ConfigError("mask format must be pgm or f32");
        exporter = std::make_unique<MaskExporter>(a.export_masks, fmt);
        opts.mask_export = exporter.get();
    }

    std::size_t total = 0;
    for (const auto& path : a.holograms) {
        const auto hid = hologram_id_from_path(path);
        const auto img = load_hologram(path, cfg.optics);
        std::unique_ptr<Segmenter> oracle;
        const Segmenter* seg = shared.get();
        if (cfg.segmenter == SegmenterKind::oracle) {
            const auto it = truth_by_id.find(hid);
            // A hologram without truth rows holds no particles.
            oracle = std::make_unique<OracleSegmenter>(it != truth_by_id.end() ? *it->second : ParticleField{hid, {}},
                                                       cfg.optics);
            seg = oracle.get();
        }
        const auto result = process_hologram(img, hid, cfg.optics, *seg, opts, bg);
        write_predictions(*pred, hid, result.particles);
        if (dets) write_detections(**dets, hid, result.detections);
        total += result.particles.size();
    }
    pred.close();
    if (dets) dets->close();
    if (exporter) exporter->finish();
    if (a.out != "-" && !a.out.empty()) {
        out << "processed " << a.holograms.size() << " holograms, " << total << " particles -> " << a.out << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- evaluate

std::vector<ParticleField> read_checked(const std::string& path, const std::map<std::string, const ParticleField*>& truth,
                                        const std::string& what) {
    require_exists(path, what);
    auto fields = read_particles_csv(path);
    for (const auto& f : fields) {
        if (!truth.contains(f.hologram_id)) {
            throw DataError(what + " " + path + " names hologram '" + f.hologram_id + "' which is absent from the truth");
        }
    }
    return fields;
}

std::vector<std::pair<std::string, std::vector<Detection>>> read_detections_checked(
    const std::string& path, const std::map<std::string, const ParticleField*>& truth) {
    require_exists(path, "detections CSV");
    auto dets = read_detections_csv(path);
    for (const auto& [hid, list] : dets) {
        if (!truth.contains(hid)) {
            throw DataError("detections " + path + " name hologram '" + hid + "' which is absent from the truth");
        }
    }
    return dets;
}

void write_sweeps(std::ostream& s, const std::vector<ParticleField>& truth,
                  const std::vector<std::pair<std::string, std::vector<Detection>>>& dets,
                  const std::vector<double>& thresholds, const MatchSpec& match) {
    std::map<std::string, const std::vector<Detection>*> by_id;
    for (const auto& [hid, list] : dets) by_id[hid] = &list;
    const std::vector<Detection> none;
    std::vector<std::vector<SweepRow>> all;
    write_sweep_header(s);
    for (const auto& f : truth) {
        const auto it = by_id.find(f.hologram_id);
        const auto& list = it != by_id.end() ? *it->second : none;
        all.push_back(threshold_sweep(list, f.particles, thresholds, match.weights));
        write_sweep_csv(s, all.back(), f.hologram_id);
    }
    if (!all.empty()) write_sweep_csv(s, mean_sweep(all), "mean");
}

struct EvaluateArgs {
    std::string pred;
    std::string truth;
    std::string detections;
    std::string out = "evaluation";
    std::string thresholds = "10:100000:41";
    int bins = 20;
};

int cmd_evaluate(const PipelineConfig& cfg, const EvaluateArgs& a, std::ostream& out) {
    require_exists(a.truth, "truth CSV");
    const auto truth = read_particles_csv(a.truth);
    const auto truth_by_id = index_fields(truth);
    const auto pred = read_checked(a.pred, truth_by_id, "predictions CSV");
    const auto pred_by_id = index_fields(pred);
    const auto thresholds = parse_thresholds(a.thresholds);
    if (a.bins < 1) throw ConfigError("--bins must be >= 1");

    const fs::path dir = a.out;
    fs::create_directories(dir);

    std::vector<MetricReport> reports;
    std::vector<std::array<std::vector<double>, 4>> errors;
    std::vector<std::vector<Particle>> pred_lists, true_lists;
    for (const auto& f : truth) {
        const auto it = pred_by_id.find(f.hologram_id);
        std::vector<Particle> ps = it != pred_by_id.end() ? it->second->particles : std::vector<Particle>{};
        reports.push_back(evaluate_hologram(f.hologram_id, ps, f.particles, cfg.match.threshold));
        errors.push_back(pair_abs_errors(pair_particles(ps, f.particles), ps, f.particles));
        pred_lists.push_back(std::move(ps));
        true_lists.push_back(f.particles);
    }
    {
        auto s = open_out(dir / "metrics.csv");
        std::vector<MetricReport> rows = reports;
        if (!reports.empty()) rows.push_back(mean_report(reports));
        write_metric_reports(s, rows);
    }
    {
        auto s = open_out(dir / "errors.csv");
        write_error_table(s, reports, errors);
    }
    const std::array<HistogramAxis, 4> axes{
        HistogramAxis{"x", 0.0, cfg.optics.width_um(), a.bins},
        HistogramAxis{"y", 0.0, cfg.optics.height_um(), a.bins},
        HistogramAxis{"z", cfg.optics.z_min, cfg.optics.z_max, a.bins},
        HistogramAxis{"d", 0.0, cfg.sizes.d_cap, a.bins},
    };
    const auto tables = emit_histograms(pred_lists, true_lists, axes);
    {
        auto s = open_out(dir / "histograms.csv");
        write_histogram_csv(s, tables);
    }
    for (const auto& t : tables) {
        auto s = open_out(dir / ("histogram_" + t.axis.name + ".svg"));
        write_histogram_svg(s, t);
    }
    if (!a.detections.empty()) {
        const auto dets = read_detections_checked(a.detections, truth_by_id);
        auto s = open_out(dir / "sweep.csv");
        write_sweeps(s, truth, dets, thresholds, cfg.match);
    }
    if (!reports.empty()) {
        const auto mean = mean_report(reports);
        out << "holograms " << reports.size() << "  match_accuracy " << csv::format_optional(mean.match.match_accuracy)
            << "  rmse_um " << csv::format_optional(mean.match.rmse) << "  csi " << csv::format_optional(mean.binary.csi)
            << '\n';
    }
    out << "wrote " << dir.string() << '\n';
    return 0;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
    std::string detections;
    std::string truth;
    std::string out = "-";
    std::string thresholds = "10:100000:41";
};

int cmd_sweep(const PipelineConfig& cfg, const SweepArgs& a, std::ostream& out) {
    require_exists(a.truth, "truth CSV");
    const auto truth = read_particles_csv(a.truth);
    const auto dets = read_detections_checked(a.detections, index_fields(truth));
    const auto thresholds = parse_thresholds(a.thresholds);
    Sink s(a.out, out);
    write_sweeps(*s, truth, dets, thresholds, cfg.match);
    s.close();
    return 0;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
    int planes = 3;
    int repeats = 3;
    std::string out = "-";
    bool pipeline = true;
};

struct Timing {
    double mean_ms = 0.0;
    double sd_ms = 0.0;
};

Timing summarize(const std::vector<double>& ms) {
    Timing t;
    if (ms.empty()) return t;
    t.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    double ss = 0.0;
    for (double v : ms) ss += (v - t.mean_ms) * (v - t.mean_ms);
    t.sd_ms = std::sqrt(ss / static_cast<double>(ms.size()));
    return t;
}

Timing time_planes(const OpticalConfig& optics, int planes, int repeats, std::uint64_t seed) {
    IntensityImage h(optics.nx, optics.ny);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.9, 1.1);
    for (auto& v : h.values()) v = u(rng);
    const Refocuser refocus(h, optics);
    auto ws = refocus.make_workspace();
    const auto centers = plane_centers(optics);
    const int n = std::min<int>(planes, static_cast<int>(centers.size()));
    refocus.reconstruct(centers[0], ws);  // warm-up
    std::vector<double> ms;
    for (int r = 0; r < repeats; ++r) {
        for (int p = 0; p < n; ++p) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto amp = refocus.reconstruct(centers[static_cast<std::size_t>(p)], ws);
            const auto t1 = std::chrono::steady_clock::now();
            if (amp.empty()) throw DataError("empty reconstruction");
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }
    return summarize(ms);
}

int cmd_bench(const PipelineConfig& cfg, const BenchArgs& a, std::ostream& out) {
    if (a.planes < 1 || a.repeats < 1) throw ConfigError("--planes and --repeats must be >= 1");
    const auto hash = config_hash(cfg);
    Sink s(a.out, out);
    *s << "case,nx,ny,n_planes,repeats,mean_ms,sd_ms,config_hash\n";
    auto row = [&](const char* name, int nx, int ny, int planes, const Timing& t) {
        *s << name << ',' << nx << ',' << ny << ',' << planes << ',' << a.repeats << ','
           << csv::format_number(t.mean_ms) << ',' << csv::format_number(t.sd_ms) << ',' << hash << '\n';
    };

    const auto base = time_planes(cfg.optics, a.planes, a.repeats, cfg.seed);
    row("reconstruct_plane", cfg.optics.nx, cfg.optics.ny, a.planes, base);

    OpticalConfig doubled = cfg.optics;
    doubled.nx *= 2;
    const auto twice = time_planes(doubled, a.planes, a.repeats, cfg.seed);
    row("reconstruct_plane", doubled.nx, doubled.ny, a.planes, twice);

    if (a.pipeline) {
        OpticalConfig optics = cfg.optics;
        optics.n_planes = a.planes;
        const auto field = sample_field(optics, std::min(cfg.n_particles, 10), cfg.sizes, cfg.seed, "bench");
        const auto img = grid_cast<double>(render_hologram(field, optics, cfg.render));
        const OracleSegmenter seg(field, optics);
        auto opts = cfg.pipeline_options();
        opts.always_reconstruct = true;
        std::vector<double> ms;
        for (int r = 0; r < a.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = process_hologram(img, field.hologram_id, optics, seg, opts);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        row("pipeline_hologram", optics.nx, optics.ny, a.planes, summarize(ms));
    }
    s.close();

    const double p1 = static_cast<double>(cfg.optics.nx) * cfg.optics.ny;
    const double expected = 2.0 * std::log2(2.0 * p1) / std::log2(p1);
    const double ratio = base.mean_ms > 0.0 ? twice.mean_ms / base.mean_ms : 0.0;
    out << "scaling: 2x pixels took " << csv::format_number(ratio) << "x (n log n predicts "
        << csv::format_number(expected) << "x, limit 2.4x) " << (ratio <= 2.4 ? "ok" : "exceeded") << '\n';
    return 0;
}

class WarningRedirect {
public:
    explicit WarningRedirect(std::ostream& err)
        : previous_(set_warning_sink([&err](const std::string& m) { err << "warning: " << m << '\n'; })) {}
    ~WarningRedirect() { set_warning_sink(previous_); }
    WarningRedirect(const WarningRedirect&) = delete;
    WarningRedirect& operator=(const WarningRedirect&) = delete;

private:
    WarningSink previous_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Particle detection in in-line holograms", "holotrack"};
    app.require_subcommand(1);
    Common common;
    app.add_option("-c,--config", common.config_path, std::string("TOML config file (default: $") + kConfigEnvVar + ")");
    app.add_option("--set", common.overrides, "Override a config key, e.g. --set tiling.step=256")
        ->allow_extra_args(false);
    app.add_option("-j,--workers", common.workers, "Worker threads (overrides run.workers)")
        ->check(CLI::PositiveNumber);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Render synthetic holograms with truth and split files");
    c_sim->add_option("-o,--out", sim.out, "Output directory")->capture_default_str();
    c_sim->add_option("-n,--holograms", sim.n_holograms, "Number of holograms (default: split total)");
    c_sim->add_option("-p,--particles", sim.n_particles, "Particles per hologram (default: simulate.n_particles)");
    c_sim->add_flag("--tiles", sim.tiles, "Also write the tile training set");
    c_sim->add_flag("--augment", sim.augment, "Corrupt and flip dataset tiles per [transforms]")->needs("--tiles");

    ReconstructArgs rec;
    auto* c_rec = app.add_subcommand("reconstruct", "Dump reconstructed amplitude planes as float32 raw");
    c_rec->add_option("hologram", rec.hologram, "Hologram image")->required();
    c_rec->add_option("--z", rec.z, "Depth in um (repeatable)")->allow_extra_args(false);
    c_rec->add_option("--plane", rec.planes, "Plane index (repeatable)")->allow_extra_args(false);
    c_rec->add_option("--background", rec.background, "Background frame (repeatable)")->allow_extra_args(false);
    c_rec->add_option("-o,--out", rec.out, "Output directory")->capture_default_str();
    c_rec->add_flag("--preview", rec.preview, "Also write 8-bit PGM previews");

    ProcessArgs proc;
    auto* c_proc = app.add_subcommand("process", "Detect particles and write the predictions CSV");
    c_proc->add_option("holograms", proc.holograms, "Hologram images");
    c_proc->add_option("-o,--out", proc.out, "Predictions CSV ('-' for stdout)")->capture_default_str();
    c_proc->add_option("--detections", proc.detections, "Also write per-plane detections");
    c_proc->add_option("--export-masks", proc.export_masks, "Write every tile mask and a manifest here");
    c_proc->add_option("--mask-format", proc.mask_format, "pgm or f32")
        ->check(CLI::IsMember({"pgm", "f32"}))
        ->capture_default_str();
    c_proc->add_option("--truth", proc.truth, "Truth CSV for the oracle segmenter");
    c_proc->add_option("--manifest", proc.manifest, "Mask manifest for the external segmenter");
    c_proc->add_option("--background", proc.background, "Background frame (repeatable)")->allow_extra_args(false);

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "Score predictions against truth");
    c_ev->add_option("--pred", ev.pred, "Predictions CSV")->required();
    c_ev->add_option("--truth", ev.truth, "Truth CSV")->required();
    c_ev->add_option("--detections", ev.detections, "Detections CSV; enables the threshold sweep");
    c_ev->add_option("-o,--out", ev.out, "Output directory")->capture_default_str();
    c_ev->add_option("--thresholds", ev.thresholds, "Sweep thresholds lo:hi:count (log spaced)")->capture_default_str();
    c_ev->add_option("--bins", ev.bins, "Histogram bins")->capture_default_str();

    SweepArgs sw;
    auto* c_sw = app.add_subcommand("sweep", "Particle count and match statistics versus clustering threshold");
    c_sw->add_option("--detections", sw.detections, "Detections CSV")->required();
    c_sw->add_option("--truth", sw.truth, "Truth CSV")->required();
    c_sw->add_option("-o,--out", sw.out, "Sweep CSV ('-' for stdout)")->capture_default_str();
    c_sw->add_option("--thresholds", sw.thresholds, "lo:hi:count (log spaced)")->capture_default_str();

    BenchArgs bench;
    bool no_pipeline = false;
    auto* c_bench = app.add_subcommand("bench", "Time plane reconstruction and the full pipeline");
    c_bench->add_option("--planes", bench.planes, "Planes per measurement")->capture_default_str();
    c_bench->add_option("--repeats", bench.repeats, "Repetitions")->capture_default_str();
    c_bench->add_option("-o,--out", bench.out, "Timing CSV ('-' for stdout)")->capture_default_str();
    c_bench->add_flag("--no-pipeline", no_pipeline, "Skip the full-pipeline timing");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    WarningRedirect redirect(err);
    try {
        const auto cfg = resolve_config(common);
        if (c_sim->parsed()) return cmd_simulate(cfg, sim, out);
        if (c_rec->parsed()) return cmd_reconstruct(cfg, rec, out);
        if (c_proc->parsed()) return cmd_process(cfg, proc, out);
        if (c_ev->parsed()) return cmd_evaluate(cfg, ev, out);
        if (c_sw->parsed()) return cmd_sweep(cfg, sw, out);
        if (c_bench->parsed()) {
            bench.pipeline = !no_pipeline;
            return cmd_bench(cfg, bench, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace holotrack::cli
