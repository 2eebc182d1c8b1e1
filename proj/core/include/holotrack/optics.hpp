#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "holotrack/grid.hpp"

namespace holotrack {

using Complex = std::complex<double>;
using ComplexField = Grid<Complex>;
/// Non-negative real image: raw camera counts or normalized intensity.
using IntensityImage = Grid<double>;

/// Instrument geometry. Lengths are in micrometres.
struct OpticalConfig {
    double wavelength = 0.355;
    double dx = 2.96;
    double dy = 2.96;
    int nx = 4872;
    int ny = 3248;
    double z_min = 14072.0;
    double z_max = 158928.0;
    int n_planes = 1000;

    /// Throws ConfigError when any invariant is violated.
    void validate() const;

    double plane_spacing() const { return (z_max - z_min) / n_planes; }
    double width_um() const { return nx * dx; }
    double height_um() const { return ny * dy; }

    friend bool operator==(const OpticalConfig&, const OpticalConfig&) = default;
};

/// Radial spatial frequency (cycles/um) for every bin of an nx-by-ny DFT, in
/// unshifted order (DC at (0,0), negative frequencies in the upper half).
Grid<double> frequency_grid(const OpticalConfig& cfg);

/// Discrete Fourier frequencies of an n-point transform with sample pitch d,
/// in unshifted order.
std::vector<double> fft_frequencies(int n, double d);

/// Angular-spectrum propagation by signed distance z (um). Evanescent
/// components (wavelength * rho >= 1) are removed. The forward transform is
/// unnormalized and the inverse carries the 1/(nx*ny) factor.
ComplexField propagate(const ComplexField& field, double z, const OpticalConfig& cfg);

/// Same as propagate() but with the plane-wave carrier exp(j 2 pi z / lambda)
/// factored out, i.e. the field is expressed relative to an on-axis reference
/// wave. A uniform field is left unchanged.
ComplexField propagate_relative(const ComplexField& field, double z, const OpticalConfig& cfg);

/// Element-wise raw / mean(ensemble). Throws DataError naming the first pixel
/// whose ensemble mean is zero.
IntensityImage normalize_background(const IntensityImage& raw, std::span<const IntensityImage> ensemble);

/// Divides by the image's own mean. Used when no background ensemble is
/// available (e.g. isolated synthetic holograms).
IntensityImage normalize_by_mean(const IntensityImage& raw);

/// Amplitude |E| of the normalized hologram propagated a distance z from the
/// camera plane. Warns (does not fail) when z is outside [z_min, z_max].
IntensityImage reconstruct_plane(const IntensityImage& h_c, double z, const OpticalConfig& cfg);

/// Centres of the N equal z-bins spanning [z_min, z_max].
std::vector<double> plane_centers(const OpticalConfig& cfg);

/// Index of the half-open bin [z_j - dz/2, z_j + dz/2) containing z, clamped
/// to [0, N-1].
int plane_index_for_depth(double z, const OpticalConfig& cfg);

class FftPlan;

/// Reusable refocusing engine for one hologram: the spectrum of h_c is
/// computed once, then each plane costs one inverse FFT. reconstruct() is
/// const and safe to call concurrently as long as each thread passes its own
/// Workspace.
class Refocuser {
public:
    class Workspace {
    public:
        Workspace(Workspace&&) noexcept;
        Workspace& operator=(Workspace&&) noexcept;
        ~Workspace();

    private:
        friend class Refocuser;
        explicit Workspace(std::unique_ptr<FftPlan> plan);
        std::unique_ptr<FftPlan> plan_;
    };

    Refocuser(const IntensityImage& h_c, const OpticalConfig& cfg);

    Workspace make_workspace() const;

    /// Amplitude image at depth z (um).
    IntensityImage reconstruct(double z, Workspace& ws) const;
    /// Complex field at depth z (um).
    ComplexField reconstruct_field(double z, Workspace& ws) const;

    const OpticalConfig& config() const { return cfg_; }

private:
    void fill_propagated(double z, Workspace& ws) const;

    OpticalConfig cfg_;
    std::vector<Complex> spectrum_;
    // 2 pi / lambda * sqrt(1 - (lambda rho)^2); negative marks evanescent bins.
    std::vector<double> kz_;
};

}  // namespace holotrack
