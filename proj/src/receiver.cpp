#include "sdrtk/receiver.hpp"

#include <cmath>

#include "sdrtk/error.hpp"
#include "sdrtk/modulate.hpp"

namespace sdrtk {

double snap_to_step(double offset_hz, double step_hz) {
    if (!(step_hz > 0.0) || !std::isfinite(step_hz)) throw ValueError("tuning step must be positive");
    if (!std::isfinite(offset_hz)) throw ValueError("tuning offset must be finite");
    const double q = offset_hz / step_hz;
    const double n = std::copysign(std::ceil(std::abs(q) - 0.5), q);
    return n * step_hz + 0.0;
}

void check_tuner_range(double center_hz) {
    if (!(center_hz >= kTunerMinHz && center_hz <= kTunerMaxHz)) {
        throw RangeError("center " + std::to_string(center_hz) + " Hz outside the tuner range 24-1850 MHz");
    }
}

RxPlan plan_receiver(const TuningParams& params, double input_rate_hz) {
    if (!(input_rate_hz > 0.0)) throw ValueError("input rate must be positive");
    const double ratio = input_rate_hz / kAudioRateHz;
    const auto ratio_n = static_cast<std::size_t>(std::llround(ratio));
    if (ratio_n == 0 || std::abs(ratio - static_cast<double>(ratio_n)) > 1e-9) {
        throw ValueError("input rate " + std::to_string(input_rate_hz) + " Hz is not a multiple of 48 kHz");
    }
    if (params.order < 2) throw ValueError("filter order must be at least 2");
    if (!(params.baseband_hz > 0.0)) throw ValueError("baseband frequency must be positive");

    RxPlan p;
    p.demod = DemodConfig::defaults(params.mode);
    p.demod.audio_cutoff_hz = clamp_audio_cutoff(params.baseband_hz);
    if (params.deviation_hz) p.demod.deviation_hz = *params.deviation_hz;
    p.demod.validate();

    const double c = p.demod.audio_cutoff_hz;
    p.channel_half_bw_hz = is_fm(params.mode) ? p.demod.deviation_hz + c : c;
    p.occupied_bw_hz = nominal_bandwidth_hz(params.mode, p.demod.deviation_hz, c);

    const double transition = mainlobe_halfwidth_bins(params.window) * input_rate_hz /
                              static_cast<double>(params.order + 1);
    p.channel_cutoff_hz = p.channel_half_bw_hz + transition;
    if (p.channel_cutoff_hz >= input_rate_hz / 2.0) {
        throw ValueError("channel filter cutoff " + std::to_string(p.channel_cutoff_hz) +
                         " Hz exceeds the input Nyquist; raise the order or sample rate");
    }
    const double need = 2.0 * (p.channel_cutoff_hz + transition);
    p.decimation = 1;
    for (std::size_t d = ratio_n; d >= 1; --d) {
        if (ratio_n % d == 0 && input_rate_hz / static_cast<double>(d) >= need) {
            p.decimation = d;
            break;
        }
    }
    p.channel_rate_hz = input_rate_hz / static_cast<double>(p.decimation);
    return p;
}

namespace {

bool same_plan(const RxPlan& a, const RxPlan& b, const TuningParams& pa, const TuningParams& pb) {
    return a.decimation == b.decimation && a.channel_cutoff_hz == b.channel_cutoff_hz && pa.window == pb.window &&
           pa.order == pb.order;
}

}  // namespace

RxChain::RxChain(const TuningParams& params, double input_rate_hz, double input_center_hz, RxChainOptions options)
    : params_(params), input_rate_(input_rate_hz), input_center_(input_center_hz), options_(options) {
    validate(params_);
    plan_ = plan_receiver(params_, input_rate_);
    channel_ = Decimator(design_lowpass({params_.order, plan_.channel_cutoff_hz, params_.window}, input_rate_),
                         plan_.decimation);
    demod_ = std::make_unique<Demodulator>(plan_.demod, plan_.channel_rate_hz);
}

double RxChain::shift_hz() const noexcept { return params_.tuned_hz() - input_center_; }

void RxChain::validate(const TuningParams& params) const {
    if (!std::isfinite(params.center_hz) || !std::isfinite(params.offset_hz)) {
        throw ValueError("tuning must be finite");
    }
    const double shift = params.tuned_hz() - input_center_;
    if (!(std::abs(shift) < input_rate_ / 2.0)) {
        throw ValueError("tuned frequency " + std::to_string(params.tuned_hz()) + " Hz lies outside the " +
                         std::to_string(input_rate_) + " Hz capture span");
    }
}

void RxChain::retune(const TuningParams& params) {
    validate(params);
    RxPlan next = plan_receiver(params, input_rate_);
    if (!same_plan(plan_, next, params_, params)) {
        channel_ = Decimator(design_lowpass({params.order, next.channel_cutoff_hz, params.window}, input_rate_),
                             next.decimation);
        demod_ = std::make_unique<Demodulator>(next.demod, next.channel_rate_hz);
    } else if (next.demod.mode != plan_.demod.mode || next.demod.audio_cutoff_hz != plan_.demod.audio_cutoff_hz ||
               next.demod.deviation_hz != plan_.demod.deviation_hz) {
        demod_ = std::make_unique<Demodulator>(next.demod, next.channel_rate_hz);
    }
    params_ = params;
    plan_ = next;
}

RxOutput RxChain::process(const IqBlock& block) {
    if (block.sample_rate_hz != input_rate_) throw ValueError("block rate does not match the receive chain");
    IqBlock tuned = block;
    const double shift = shift_hz();
    if (shift != 0.0) mix_in_place(tuned.samples, shift, input_rate_, block.start_index);
    tuned.center_hz = params_.tuned_hz();

    RxOutput out;
    if (options_.spectrum_fft > 0 && tuned.samples.size() >= options_.spectrum_fft) {
        out.spectrum = power_spectrum(tuned, options_.spectrum_fft, params_.window);
    }
    if (options_.estimate_snr && tuned.samples.size() >= 64) {
        double sig_center = tuned.center_hz;
        if (params_.mode == DemodMode::SSB_USB) sig_center += plan_.occupied_bw_hz / 2.0;
        if (params_.mode == DemodMode::SSB_LSB) sig_center -= plan_.occupied_bw_hz / 2.0;
        WelchOptions w;
        w.fft_size = options_.snr_fft;
        try {
            out.snr_db = estimate_snr(tuned, sig_center, plan_.occupied_bw_hz, w);
        } catch (const ValueError&) {
            out.snr_db.reset();
        }
    }
    const auto channel = channel_.process(tuned.samples);
    out.audio = demod_->process(channel);
    return out;
}

}  // namespace sdrtk
