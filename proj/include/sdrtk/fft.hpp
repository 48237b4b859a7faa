#pragma once

#include <memory>
#include <span>

#include "sdrtk/types.hpp"

namespace sdrtk {

// In-place forward complex DFT of a fixed size, backed by FFTW. Not shareable across
// threads; construct one per thread.
class Fft {
public:
    explicit Fft(std::size_t n);
    ~Fft();
    Fft(Fft&&) noexcept;
    Fft& operator=(Fft&&) noexcept;

    std::size_t size() const noexcept { return n_; }
    void forward(std::span<Sample> data);

private:
    struct Plan;
    std::size_t n_;
    std::unique_ptr<Plan> plan_;
};

}  // namespace sdrtk
