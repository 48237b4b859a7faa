#include "sdrtk/modulate.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "sdrtk/error.hpp"

namespace sdrtk {

TxConfig TxConfig::defaults(DemodMode mode, double sample_rate_hz) {
    TxConfig c;
    c.mode = mode;
    c.sample_rate_hz = sample_rate_hz;
    if (mode == DemodMode::WFM) {
        c.deviation_hz = 75000.0;
        c.audio_bandwidth_hz = 15000.0;
        c.preemphasis_us = 50.0;
    }
    return c;
}

void TxConfig::validate() const {
    if (!(sample_rate_hz > 0.0)) throw ValueError("transmit sample rate must be positive");
    if (!(audio_rate_hz > 0.0)) throw ValueError("audio rate must be positive");
    if (is_fm(mode)) {
        if (!(deviation_hz > 0.0)) throw ValueError("FM deviation must be positive");
        if (deviation_hz >= sample_rate_hz / 2.0) {
            throw ValueError("FM deviation " + std::to_string(deviation_hz) + " Hz reaches Nyquist");
        }
        if (!(preemphasis_us >= 0.0)) throw ValueError("pre-emphasis must be non-negative");
    }
    if (mode == DemodMode::AM && !(am_depth > 0.0 && am_depth <= 1.0)) {
        throw ValueError("AM depth " + std::to_string(am_depth) + " outside (0, 1] (overmodulation)");
    }
    if (!(audio_bandwidth_hz > 0.0)) throw ValueError("audio bandwidth must be positive");
}

double nominal_bandwidth_hz(DemodMode mode, double deviation_hz, double audio_bandwidth_hz) {
    switch (mode) {
        case DemodMode::NFM:
        case DemodMode::WFM: return 2.0 * (deviation_hz + audio_bandwidth_hz);
        case DemodMode::AM:
        case DemodMode::DSB: return 2.0 * audio_bandwidth_hz;
        case DemodMode::SSB_USB:
        case DemodMode::SSB_LSB: return audio_bandwidth_hz;
    }
    return audio_bandwidth_hz;
}

namespace {
constexpr WindowKind kSidebandWindow = WindowKind::BlackmanHarris4;
constexpr double kSidebandTransitionHz = 200.0;
}  // namespace

struct Modulator::Impl {
    LinearInterpolator<double> interp;
    LinearInterpolator<Sample> cinterp;
    double phase = 0.0;
    double pre_alpha = 0.0;
    double pre_prev = 0.0;
    bool preemph = false;

    Decimator sideband;
    double sideband_shift = 0.0;
    std::uint64_t audio_index = 0;
    std::uint64_t out_index = 0;

    std::vector<double> abuf;
    std::vector<Sample> cbuf;
};

Modulator::Modulator(const TxConfig& config) : config_(config), impl_(std::make_unique<Impl>()) {
    config_.validate();
    if (!(std::abs(config_.carrier_hz) < config_.sample_rate_hz / 2.0)) {
        throw ValueError("carrier offset " + std::to_string(config_.carrier_hz) + " Hz outside +/- Nyquist");
    }
    auto& m = *impl_;
    m.interp = LinearInterpolator<double>(config_.audio_rate_hz, config_.sample_rate_hz);
    m.cinterp = LinearInterpolator<Sample>(config_.audio_rate_hz, config_.sample_rate_hz);
    if (is_fm(config_.mode) && config_.preemphasis_us > 0.0) {
        m.preemph = true;
        m.pre_alpha = 1.0 - std::exp(-1.0 / (config_.sample_rate_hz * config_.preemphasis_us * 1e-6));
    }
    if (is_ssb(config_.mode)) {
        const double c = config_.audio_bandwidth_hz;
        if (c >= config_.audio_rate_hz / 2.0) throw ValueError("SSB audio bandwidth must be below audio Nyquist");
        const auto order = order_for_transition(kSidebandWindow, kSidebandTransitionHz, config_.audio_rate_hz);
        m.sideband = Decimator(design_lowpass({order, c / 2.0, kSidebandWindow}, config_.audio_rate_hz), 1);
        m.sideband_shift = (config_.mode == DemodMode::SSB_USB) ? c / 2.0 : -c / 2.0;
    }
}

Modulator::~Modulator() = default;
Modulator::Modulator(Modulator&&) noexcept = default;
Modulator& Modulator::operator=(Modulator&&) noexcept = default;

void Modulator::reset() {
    auto& m = *impl_;
    m.interp.reset();
    m.cinterp.reset();
    m.phase = 0.0;
    m.pre_prev = 0.0;
    m.sideband.reset();
    m.audio_index = m.out_index = 0;
}

std::vector<Sample> Modulator::process(std::span<const double> audio) {
    auto& m = *impl_;
    const double fs = config_.sample_rate_hz;
    std::vector<Sample> out;

    if (is_ssb(config_.mode)) {
        // One sideband of the real audio, selected at the audio rate, then interpolated.
        m.cbuf.assign(audio.begin(), audio.end());
        mix_in_place(m.cbuf, m.sideband_shift, config_.audio_rate_hz, m.audio_index);
        auto side = m.sideband.process(m.cbuf);
        mix_in_place(side, -m.sideband_shift, config_.audio_rate_hz, m.audio_index);
        m.audio_index += side.size();
        for (auto& z : side) z *= 2.0;
        m.cinterp.process(side, out);
    } else {
        m.abuf.clear();
        m.interp.process(audio, m.abuf);
        out.resize(m.abuf.size());
        switch (config_.mode) {
            case DemodMode::NFM:
            case DemodMode::WFM: {
                const double k = 2.0 * std::numbers::pi / fs;
                for (std::size_t i = 0; i < m.abuf.size(); ++i) {
                    double a = m.abuf[i];
                    if (m.preemph) {
                        const double raw = a;
                        a = (raw - (1.0 - m.pre_alpha) * m.pre_prev) / m.pre_alpha;
                        m.pre_prev = raw;
                    }
                    out[i] = std::polar(1.0, m.phase);
                    m.phase = std::remainder(m.phase + k * (config_.carrier_hz + config_.deviation_hz * a),
                                             2.0 * std::numbers::pi);
                }
                m.out_index += out.size();
                return out;
            }
            case DemodMode::AM:
                for (std::size_t i = 0; i < m.abuf.size(); ++i) out[i] = 1.0 + config_.am_depth * m.abuf[i];
                break;
            case DemodMode::DSB:
                for (std::size_t i = 0; i < m.abuf.size(); ++i) out[i] = m.abuf[i];
                break;
            default: break;
        }
    }
    if (config_.carrier_hz != 0.0) mix_in_place(out, -config_.carrier_hz, fs, m.out_index);
    m.out_index += out.size();
    return out;
}

namespace {

std::vector<Sample> run_once(std::span<const double> audio, TxConfig c) {
    Modulator mod(c);
    return mod.process(audio);
}

}  // namespace

std::vector<Sample> mod_fm(std::span<const double> audio, const TxConfig& config) {
    if (!is_fm(config.mode)) throw ValueError("mod_fm needs an FM mode");
    return run_once(audio, config);
}

std::vector<Sample> mod_am(std::span<const double> audio, const TxConfig& config) {
    TxConfig c = config;
    c.mode = DemodMode::AM;
    return run_once(audio, c);
}

std::vector<Sample> mod_dsb(std::span<const double> audio, const TxConfig& config) {
    TxConfig c = config;
    c.mode = DemodMode::DSB;
    return run_once(audio, c);
}

std::vector<Sample> mod_ssb(std::span<const double> audio, const TxConfig& config, bool upper) {
    TxConfig c = config;
    c.mode = upper ? DemodMode::SSB_USB : DemodMode::SSB_LSB;
    return run_once(audio, c);
}

GpioFmTransmitter::GpioFmTransmitter(const TxConfig& config) : config_(config) {
    config_.validate();
    if (!(config_.carrier_hz > 0.0) || config_.carrier_hz > config_.sample_rate_hz / 8.0) {
        throw ValueError("GPIO carrier " + std::to_string(config_.carrier_hz) + " Hz must lie in (0, fs/8 = " +
                         std::to_string(config_.sample_rate_hz / 8.0) + "]");
    }
    if (config_.deviation_hz >= config_.carrier_hz) throw ValueError("GPIO deviation must stay below the carrier");
    interp_ = LinearInterpolator<double>(config_.audio_rate_hz, config_.sample_rate_hz);
}

void GpioFmTransmitter::reset() {
    interp_.reset();
    phase_ = 0.0;
}

std::vector<double> GpioFmTransmitter::process(std::span<const double> audio) {
    scratch_.clear();
    interp_.process(audio, scratch_);
    const double k = 2.0 * std::numbers::pi / config_.sample_rate_hz;
    std::vector<double> out(scratch_.size());
    for (std::size_t i = 0; i < scratch_.size(); ++i) {
        out[i] = std::sin(phase_) >= 0.0 ? 1.0 : -1.0;
        phase_ = std::remainder(phase_ + k * (config_.carrier_hz + config_.deviation_hz * scratch_[i]),
                                2.0 * std::numbers::pi);
    }
    return out;
}

std::vector<double> gpio_fm_waveform(std::span<const double> audio, const TxConfig& config) {
    GpioFmTransmitter tx(config);
    return tx.process(audio);
}

}  // namespace sdrtk
