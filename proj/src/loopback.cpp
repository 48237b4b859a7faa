#include "sdrtk/loopback.hpp"

#include <cmath>
#include <numbers>

#include "sdrtk/channel.hpp"
#include "sdrtk/metrics.hpp"
#include "sdrtk/modulate.hpp"
#include "sdrtk/receiver.hpp"

namespace sdrtk {

std::vector<double> loopback_test_audio(double duration_s) {
    const auto n = static_cast<std::size_t>(std::llround(duration_s * kAudioRateHz));
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / kAudioRateHz;
        a[k] = 0.3 * (std::sin(2.0 * std::numbers::pi * 400.0 * t) + std::sin(2.0 * std::numbers::pi * 1000.0 * t) +
                      std::sin(2.0 * std::numbers::pi * 2700.0 * t));
    }
    return a;
}

LoopbackResult run_loopback(DemodMode mode, const LoopbackOptions& options) {
    const auto audio = loopback_test_audio(options.duration_s);
    const TxConfig tx = TxConfig::defaults(mode, options.sample_rate_hz);

    IqBlock block;
    block.samples = Modulator(tx).process(audio);
    block.sample_rate_hz = options.sample_rate_hz;
    block.center_hz = 100e6;
    if (options.snr_db) {
        double power = 0.0;
        for (const auto& z : block.samples) power += std::norm(z);
        power /= static_cast<double>(block.samples.size());
        AwgnChannel(AwgnParams{*options.snr_db, power, nominal_bandwidth_hz(tx), options.sample_rate_hz},
                    derive_seed(options.seed, static_cast<std::uint64_t>(mode)))
            .apply(block);
    }

    TuningParams p;
    p.center_hz = block.center_hz;
    p.mode = mode;
    p.baseband_hz = tx.audio_bandwidth_hz;
    RxChain rx(p, options.sample_rate_hz, block.center_hz);
    const auto out = rx.process(block).audio.samples;

    const std::size_t skip = static_cast<std::size_t>(0.1 * kAudioRateHz);
    const auto c = best_lag_correlation(audio, out, 479, skip);
    return {mode, c.correlation, c.lag};
}

}  // namespace sdrtk
