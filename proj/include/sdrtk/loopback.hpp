#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sdrtk/types.hpp"

namespace sdrtk {

struct LoopbackOptions {
    double sample_rate_hz = 240000.0;
    double duration_s = 0.5;
    std::optional<double> snr_db;  // absent: noiseless
    std::uint64_t seed = 1;
};

struct LoopbackResult {
    DemodMode mode = DemodMode::NFM;
    double correlation = 0.0;
    std::size_t lag = 0;  // recovered audio delay in 48 kHz samples
};

/// Band-limited test audio at 48 kHz: 400, 1000 and 2700 Hz tones, 0.3 each.
std::vector<double> loopback_test_audio(double duration_s);

/// Modulate the test audio in `mode`, optionally add calibrated AWGN, receive it with
/// the default chain for that mode and correlate against the original.
LoopbackResult run_loopback(DemodMode mode, const LoopbackOptions& options = {});

}  // namespace sdrtk
