#include "sdrtk/fft.hpp"

#include <cstring>
#include <mutex>

#include <fftw3.h>

#include "sdrtk/error.hpp"

namespace sdrtk {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct Fft::Plan {
    fftw_complex* buffer = nullptr;
    fftw_plan plan = nullptr;

    ~Plan() {
        std::lock_guard lock(planner_mutex());
        if (plan) fftw_destroy_plan(plan);
        if (buffer) fftw_free(buffer);
    }
};

Fft::Fft(std::size_t n) : n_(n), plan_(std::make_unique<Plan>()) {
    if (n == 0) throw ValueError("FFT size must be positive");
    std::lock_guard lock(planner_mutex());
    plan_->buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    plan_->plan = fftw_plan_dft_1d(static_cast<int>(n), plan_->buffer, plan_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<Sample> data) {
    if (data.size() != n_) throw ValueError("FFT input length mismatch");
    // std::complex<double> is layout-compatible with fftw_complex.
    std::memcpy(plan_->buffer, data.data(), n_ * sizeof(Sample));
    fftw_execute(plan_->plan);
    std::memcpy(data.data(), plan_->buffer, n_ * sizeof(Sample));
}

}  // namespace sdrtk
