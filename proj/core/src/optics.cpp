#include "holotrack/optics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "holotrack/error.hpp"

namespace holotrack {

void OpticalConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("optical config: " + what); };
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) fail("wavelength must be > 0");
    if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy)) fail("pixel pitch must be > 0");
    if (nx < 2 || ny < 2) fail("nx and ny must be >= 2");
    if (!(z_min < z_max) || !std::isfinite(z_min) || !std::isfinite(z_max)) fail("z_min must be < z_max");
    if (n_planes < 1) fail("n_planes must be >= 1");
}

std::vector<double> fft_frequencies(int n, double d) {
    std::vector<double> f(static_cast<std::size_t>(n));
    const double scale = 1.0 / (n * d);
    const int n_pos = (n - 1) / 2 + 1;  // 0 .. (n-1)/2
    for (int i = 0; i < n; ++i) {
        const int k = i < n_pos ? i : i - n;
        f[static_cast<std::size_t>(i)] = k * scale;
    }
    return f;
}

Grid<double> frequency_grid(const OpticalConfig& cfg) {
    cfg.validate();
    const auto fx = fft_frequencies(cfg.nx, cfg.dx);
    const auto fy = fft_frequencies(cfg.ny, cfg.dy);
    Grid<double> rho(cfg.nx, cfg.ny);
    for (int v = 0; v < cfg.ny; ++v) {
        for (int u = 0; u < cfg.nx; ++u) {
            rho(u, v) = std::hypot(fx[static_cast<std::size_t>(u)], fy[static_cast<std::size_t>(v)]);
        }
    }
    return rho;
}

namespace {

// sqrt(1 - (lambda rho)^2) per bin, or -1 for evanescent bins.
std::vector<double> direction_cosines(const OpticalConfig& cfg) {
    const auto rho = frequency_grid(cfg);
    std::vector<double> out(rho.size());
    auto r = rho.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double lr = cfg.wavelength * r[i];
        out[i] = lr < 1.0 ? std::sqrt(1.0 - lr * lr) : -1.0;
    }
    return out;
}

ComplexField apply_transfer(const ComplexField& field, double z, const OpticalConfig& cfg, bool relative) {
    cfg.validate();
    if (field.nx() != cfg.nx || field.ny() != cfg.ny) {
        std::ostringstream os;
        os << "propagate: field is " << field.nx() << "x" << field.ny() << " but config expects " << cfg.nx << "x"
           << cfg.ny;
        throw DataError(os.str());
    }
    if (z == 0.0) return field;

    const auto cosines = direction_cosines(cfg);
    const double k = 2.0 * std::numbers::pi / cfg.wavelength;

    FftPlan plan(cfg.nx, cfg.ny);
    auto buf = plan.buffer();
    std::copy(field.values().begin(), field.values().end(), buf.begin());
    plan.forward();
    for (std::size_t i = 0; i < buf.size(); ++i) {
        const double c = cosines[i];
        if (c < 0.0) {
            buf[i] = 0.0;
            continue;
        }
        // c - 1 written to avoid cancellation for small angles.
        const double s = relative ? -(1.0 - c * c) / (1.0 + c) : c;
        buf[i] *= std::polar(1.0, k * z * s);
    }
    plan.inverse();
    ComplexField out(cfg.nx, cfg.ny);
    std::copy(buf.begin(), buf.end(), out.values().begin());
    return out;
}

}  // namespace

ComplexField propagate(const ComplexField& field, double z, const OpticalConfig& cfg) {
    return apply_transfer(field, z, cfg, false);
}

ComplexField propagate_relative(const ComplexField& field, double z, const OpticalConfig& cfg) {
    return apply_transfer(field, z, cfg, true);
}

IntensityImage normalize_background(const IntensityImage& raw, std::span<const IntensityImage> ensemble) {
    if (ensemble.empty()) throw DataError("normalize_background: empty ensemble");
    for (const auto& img : ensemble) {
        if (!img.same_shape(raw)) throw DataError("normalize_background: ensemble image dimensions differ from raw");
    }
    IntensityImage mean(raw.nx(), raw.ny(), 0.0);
    auto m = mean.values();
    for (const auto& img : ensemble) {
        auto v = img.values();
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += v[i];
    }
    const double inv = 1.0 / static_cast<double>(ensemble.size());
    IntensityImage out(raw.nx(), raw.ny());
    auto r = raw.values();
    auto o = out.values();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double mu = m[i] * inv;
        if (mu == 0.0) {
            const auto x = static_cast<int>(i % static_cast<std::size_t>(raw.nx()));
            const auto y = static_cast<int>(i / static_cast<std::size_t>(raw.nx()));
            throw DataError("normalize_background: ensemble mean is zero at pixel (x=" + std::to_string(x) +
                            ", y=" + std::to_string(y) + ")");
        }
        o[i] = r[i] / mu;
    }
    return out;
}

IntensityImage normalize_by_mean(const IntensityImage& raw) {
    if (raw.empty()) throw DataError("normalize_by_mean: empty image");
    double sum = 0.0;
    for (double v : raw.values()) sum += v;
    const double mean = sum / static_cast<double>(raw.size());
    if (!(mean > 0.0)) throw DataError("normalize_by_mean: image mean is not positive");
    IntensityImage out = raw;
    for (double& v : out.values()) v /= mean;
    return out;
}

IntensityImage reconstruct_plane(const IntensityImage& h_c, double z, const OpticalConfig& cfg) {
    Refocuser refocuser(h_c, cfg);
    auto ws = refocuser.make_workspace();
    return refocuser.reconstruct(z, ws);
}

std::vector<double> plane_centers(const OpticalConfig& cfg) {
    cfg.validate();
    std::vector<double> z(static_cast<std::size_t>(cfg.n_planes));
    const double span = cfg.z_max - cfg.z_min;
    for (int j = 0; j < cfg.n_planes; ++j) {
        z[static_cast<std::size_t>(j)] = cfg.z_min + (j + 0.5) * span / cfg.n_planes;
    }
    return z;
}

int plane_index_for_depth(double z, const OpticalConfig& cfg) {
    const double t = (z - cfg.z_min) / (cfg.z_max - cfg.z_min) * cfg.n_planes;
    const double j = std::floor(t);
    if (j < 0.0) return 0;
    if (j >= cfg.n_planes) return cfg.n_planes - 1;
    return static_cast<int>(j);
}

Refocuser::Workspace::Workspace(std::unique_ptr<FftPlan> plan) : plan_(std::move(plan)) {}
Refocuser::Workspace::Workspace(Workspace&&) noexcept = default;
Refocuser::Workspace& Refocuser::Workspace::operator=(Workspace&&) noexcept = default;
Refocuser::Workspace::~Workspace() = default;

Refocuser::Refocuser(const IntensityImage& h_c, const OpticalConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (h_c.nx() != cfg.nx || h_c.ny() != cfg.ny) {
        throw DataError("Refocuser: hologram is " + std::to_string(h_c.nx()) + "x" + std::to_string(h_c.ny()) +
                        " but config expects " + std::to_string(cfg.nx) + "x" + std::to_string(cfg.ny));
    }
    const auto cosines = direction_cosines(cfg_);
    const double k = 2.0 * std::numbers::pi / cfg_.wavelength;
    kz_.resize(cosines.size());
    for (std::size_t i = 0; i < kz_.size(); ++i) kz_[i] = cosines[i] < 0.0 ? -1.0 : k * cosines[i];

    FftPlan plan(cfg_.nx, cfg_.ny);
    auto buf = plan.buffer();
    auto src = h_c.values();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = src[i];
    plan.forward();
    spectrum_.assign(buf.begin(), buf.end());
}

Refocuser::Workspace Refocuser::make_workspace() const {
    return Workspace(std::make_unique<FftPlan>(cfg_.nx, cfg_.ny));
}

void Refocuser::fill_propagated(double z, Workspace& ws) const {
    if (z < cfg_.z_min || z > cfg_.z_max) {
        warn("reconstruct: z = " + std::to_string(z) + " um is outside [" + std::to_string(cfg_.z_min) + ", " +
             std::to_string(cfg_.z_max) + "]");
    }
    auto buf = ws.plan_->buffer();
    for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = kz_[i] < 0.0 ? Complex{} : spectrum_[i] * std::polar(1.0, kz_[i] * z);
    }
    ws.plan_->inverse();
}

IntensityImage Refocuser::reconstruct(double z, Workspace& ws) const {
    fill_propagated(z, ws);
    IntensityImage out(cfg_.nx, cfg_.ny);
    auto buf = ws.plan_->buffer();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::abs(buf[i]);
    return out;
}

ComplexField Refocuser::reconstruct_field(double z, Workspace& ws) const {
    fill_propagated(z, ws);
    ComplexField out(cfg_.nx, cfg_.ny);
    auto buf = ws.plan_->buffer();
    std::copy(buf.begin(), buf.end(), out.values().begin());
    return out;
}

}  // namespace holotrack
