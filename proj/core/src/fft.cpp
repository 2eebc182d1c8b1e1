#include "fft.hpp"

#include <mutex>
#include <new>

namespace holotrack {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

FftPlan::FftPlan(int nx, int ny)
    : nx_(nx), ny_(ny), n_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)) {
    data_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
    if (data_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    // Row-major: ny rows of nx samples.
    fwd_ = fftw_plan_dft_2d(ny, nx, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(ny, nx, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftPlan::~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(data_);
}

std::span<std::complex<double>> FftPlan::buffer() {
    return {reinterpret_cast<std::complex<double>*>(data_), n_};
}

void FftPlan::forward() { fftw_execute(fwd_); }

void FftPlan::inverse() {
    fftw_execute(inv_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : buffer()) v *= scale;
}

}  // namespace holotrack
