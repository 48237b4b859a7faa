#include "sdrtk/demod.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "sdrtk/error.hpp"

namespace sdrtk {

DemodConfig DemodConfig::defaults(DemodMode mode) {
    DemodConfig c;
    c.mode = mode;
    switch (mode) {
        case DemodMode::WFM:
            c.deviation_hz = 75000.0;
            c.deemphasis_us = 50.0;
            c.audio_cutoff_hz = 15000.0;
            break;
        case DemodMode::NFM:
            c.deviation_hz = 2500.0;
            c.audio_cutoff_hz = 5000.0;
            break;
        default:
            c.audio_cutoff_hz = 5000.0;
            break;
    }
    return c;
}

void DemodConfig::validate() const {
    if (is_fm(mode) && !(deviation_hz > 0.0)) throw ValueError("FM deviation must be positive");
    if (!(deemphasis_us >= 0.0)) throw ValueError("de-emphasis time constant must be non-negative");
    if (!(audio_cutoff_hz > 0.0)) throw ValueError("audio cutoff must be positive");
}

double clamp_audio_cutoff(double cutoff_hz) { return std::min(cutoff_hz, kMaxAudioCutoffHz); }

RunningMeanDcBlocker::RunningMeanDcBlocker(std::size_t window) : ring_(std::max<std::size_t>(window, 1), 0.0) {}

double RunningMeanDcBlocker::operator()(double x) {
    if (filled_ == ring_.size()) {
        sum_ -= ring_[pos_];
    } else {
        ++filled_;
    }
    ring_[pos_] = x;
    sum_ += x;
    pos_ = (pos_ + 1 == ring_.size()) ? 0 : pos_ + 1;
    return x - sum_ / static_cast<double>(filled_);
}

void RunningMeanDcBlocker::reset() {
    std::fill(ring_.begin(), ring_.end(), 0.0);
    pos_ = filled_ = 0;
    sum_ = 0.0;
}

FmDiscriminator::FmDiscriminator(double sample_rate_hz, double deviation_hz)
    : scale_(sample_rate_hz / (2.0 * std::numbers::pi * deviation_hz)) {}

void FmDiscriminator::process(std::span<const Sample> in, std::vector<double>& out) {
    for (const Sample& z : in) {
        const Sample d = z * std::conj(prev_);
        out.push_back((d == Sample{}) ? 0.0 : std::arg(d) * scale_);
        prev_ = z;
    }
}

Deemphasis::Deemphasis(double sample_rate_hz, double tau_s) : alpha_(1.0 - std::exp(-1.0 / (sample_rate_hz * tau_s))) {}

void Deemphasis::process(std::span<double> inout) {
    for (double& x : inout) {
        state_ += alpha_ * (x - state_);
        x = state_;
    }
}

namespace {

constexpr WindowKind kInternalWindow = WindowKind::BlackmanHarris4;
constexpr double kDcWindowSeconds = 0.2;  // 10 periods of a 50 Hz audio floor
constexpr double kSidebandTransitionHz = 200.0;

// Audio low-pass decimating to 48 kHz; flat to cutoff - th, stopband from cutoff + th.
RealDecimator make_audio_filter(double cutoff, double input_rate, std::size_t factor) {
    const double th = std::min(0.25 * cutoff, kAudioRateHz - 2.0 * cutoff);
    const std::size_t order = order_for_transition(kInternalWindow, th, input_rate);
    return RealDecimator(design_lowpass({order, cutoff, kInternalWindow}, input_rate), factor);
}

}  // namespace

struct Demodulator::Impl {
    DemodMode mode;
    std::size_t factor;
    double audio_cutoff;

    FmDiscriminator disc;
    std::optional<Deemphasis> deemph;
    RunningMeanDcBlocker dc;
    RealDecimator audio;

    Decimator ssb_pre;
    Decimator ssb_band;
    double ssb_shift = 0.0;
    std::uint64_t ssb_index = 0;

    std::vector<double> real_buf;
    std::vector<Sample> cplx_buf;
};

Demodulator::Demodulator(const DemodConfig& config, double input_rate_hz)
    : config_(config), input_rate_(input_rate_hz), impl_(std::make_unique<Impl>()) {
    config_.validate();
    const double ratio = input_rate_hz / kAudioRateHz;
    const auto factor = static_cast<std::size_t>(std::llround(ratio));
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9) {
        throw ValueError("demodulator input rate " + std::to_string(input_rate_hz) +
                         " Hz is not an integer multiple of 48 kHz");
    }
    config_.audio_cutoff_hz = clamp_audio_cutoff(config_.audio_cutoff_hz);
    auto& m = *impl_;
    m.mode = config_.mode;
    m.factor = factor;
    m.audio_cutoff = config_.audio_cutoff_hz;
    const double c = m.audio_cutoff;

    if (is_ssb(m.mode)) {
        const double th = std::min(0.25 * c, (kAudioRateHz - 2.0 * c) / 2.0);
        const std::size_t pre_order = order_for_transition(kInternalWindow, th, input_rate_hz);
        m.ssb_pre = Decimator(design_lowpass({pre_order, c + th, kInternalWindow}, input_rate_hz), factor);
        const std::size_t band_order = order_for_transition(kInternalWindow, kSidebandTransitionHz, kAudioRateHz);
        m.ssb_band = Decimator(design_lowpass({band_order, c / 2.0, kInternalWindow}, kAudioRateHz), 1);
        m.ssb_shift = (m.mode == DemodMode::SSB_USB) ? c / 2.0 : -c / 2.0;
    } else {
        m.audio = make_audio_filter(c, input_rate_hz, factor);
        if (is_fm(m.mode)) {
            m.disc = FmDiscriminator(input_rate_hz, config_.deviation_hz);
            if (m.mode == DemodMode::WFM && config_.deemphasis_us > 0.0) {
                m.deemph = Deemphasis(input_rate_hz, config_.deemphasis_us * 1e-6);
            }
        } else {
            m.dc = RunningMeanDcBlocker(static_cast<std::size_t>(std::lround(kDcWindowSeconds * input_rate_hz)));
        }
    }
}

Demodulator::~Demodulator() = default;
Demodulator::Demodulator(Demodulator&&) noexcept = default;
Demodulator& Demodulator::operator=(Demodulator&&) noexcept = default;

void Demodulator::reset() {
    auto& m = *impl_;
    m.disc.reset();
    if (m.deemph) m.deemph->reset();
    m.dc.reset();
    m.audio.reset();
    m.ssb_pre.reset();
    m.ssb_band.reset();
    m.ssb_index = 0;
}

AudioBlock Demodulator::process(std::span<const Sample> in) {
    auto& m = *impl_;
    AudioBlock out;
    out.rate_hz = kAudioRateHz;
    out.samples.reserve(in.size() / m.factor + 1);
    m.real_buf.clear();

    switch (m.mode) {
        case DemodMode::NFM:
        case DemodMode::WFM:
            m.disc.process(in, m.real_buf);
            if (m.deemph) m.deemph->process(m.real_buf);
            m.audio.process(m.real_buf, out.samples);
            break;
        case DemodMode::AM:
            for (const Sample& z : in) m.real_buf.push_back(m.dc(std::abs(z)));
            m.audio.process(m.real_buf, out.samples);
            break;
        case DemodMode::DSB:
            for (const Sample& z : in) m.real_buf.push_back(m.dc(z.real()));
            m.audio.process(m.real_buf, out.samples);
            break;
        case DemodMode::SSB_USB:
        case DemodMode::SSB_LSB: {
            m.cplx_buf.clear();
            m.ssb_pre.process(in, m.cplx_buf);
            mix_in_place(m.cplx_buf, m.ssb_shift, kAudioRateHz, m.ssb_index);
            auto band = m.ssb_band.process(m.cplx_buf);
            mix_in_place(band, -m.ssb_shift, kAudioRateHz, m.ssb_index);
            m.ssb_index += band.size();
            for (const Sample& z : band) out.samples.push_back(z.real());
            break;
        }
    }
    for (double& x : out.samples) x = std::clamp(x, -kOutputLimit, kOutputLimit);
    return out;
}

namespace {

AudioBlock run_once(const IqBlock& block, DemodConfig config) {
    Demodulator d(config, block.sample_rate_hz);
    return d.process(block.samples);
}

}  // namespace

AudioBlock demod_fm(const IqBlock& block, const DemodConfig& config) {
    if (!is_fm(config.mode)) throw ValueError("demod_fm needs an FM mode");
    return run_once(block, config);
}

AudioBlock demod_am(const IqBlock& block, const DemodConfig& config) {
    DemodConfig c = config;
    c.mode = DemodMode::AM;
    return run_once(block, c);
}

AudioBlock demod_dsb(const IqBlock& block, const DemodConfig& config) {
    DemodConfig c = config;
    c.mode = DemodMode::DSB;
    return run_once(block, c);
}

AudioBlock demod_ssb(const IqBlock& block, const DemodConfig& config, bool upper) {
    DemodConfig c = config;
    c.mode = upper ? DemodMode::SSB_USB : DemodMode::SSB_LSB;
    return run_once(block, c);
}

}  // namespace sdrtk
