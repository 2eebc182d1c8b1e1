#pragma once

#include <complex>
#include <cstddef>
#include <span>

#include <fftw3.h>

namespace holotrack {

/// Owns an FFTW-allocated buffer plus forward/backward 2-D plans over it.
/// Planning is serialized through a global mutex (FFTW's planner is not
/// thread-safe); execution only touches this object's buffer.
class FftPlan {
public:
    FftPlan(int nx, int ny);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    std::span<std::complex<double>> buffer();

    /// In-place unnormalized forward transform.
    void forward();
    /// In-place inverse transform including the 1/(nx*ny) factor.
    void inverse();

    int nx() const { return nx_; }
    int ny() const { return ny_; }

private:
    int nx_;
    int ny_;
    std::size_t n_;
    fftw_complex* data_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

}  // namespace holotrack
