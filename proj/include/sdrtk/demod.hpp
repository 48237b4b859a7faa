#pragma once

#include <memory>
#include <span>

#include "sdrtk/dsp.hpp"
#include "sdrtk/types.hpp"

namespace sdrtk {

struct DemodConfig {
    DemodMode mode = DemodMode::NFM;
    double deviation_hz = 2500.0;   // FM only
    double deemphasis_us = 0.0;     // WFM only; 0 disables
    double audio_cutoff_hz = 5000.0;

    static DemodConfig defaults(DemodMode mode);
    void validate() const;
};

/// Highest audio cutoff the 48 kHz output can carry without aliasing into the passband.
inline constexpr double kMaxAudioCutoffHz = 0.45 * kAudioRateHz;
double clamp_audio_cutoff(double cutoff_hz);

/// DC remover: subtracts the running mean over the last `window` samples
/// (over the samples seen so far while the window fills).
class RunningMeanDcBlocker {
public:
    RunningMeanDcBlocker() = default;
    explicit RunningMeanDcBlocker(std::size_t window);
    double operator()(double x);
    void reset();

private:
    std::vector<double> ring_;
    std::size_t pos_ = 0;
    std::size_t filled_ = 0;
    double sum_ = 0.0;
};

/// Quadrature discriminator: arg(z[k] conj(z[k-1])) * fs / (2 pi deviation).
/// A zero-magnitude product yields 0.
class FmDiscriminator {
public:
    FmDiscriminator() = default;
    FmDiscriminator(double sample_rate_hz, double deviation_hz);
    void process(std::span<const Sample> in, std::vector<double>& out);
    void reset() { prev_ = Sample{}; }

private:
    double scale_ = 1.0;
    Sample prev_{};
};

/// Single-pole de-emphasis low-pass with time constant tau.
class Deemphasis {
public:
    Deemphasis() = default;
    Deemphasis(double sample_rate_hz, double tau_s);
    void process(std::span<double> inout);
    void reset() { state_ = 0.0; }

private:
    double alpha_ = 1.0;
    double state_ = 0.0;
};

/// Complex baseband (tuned, channel-filtered) in, 48 kHz mono audio out.
/// The input rate must be an integer multiple of 48 kHz.
class Demodulator {
public:
    inline static constexpr double kOutputLimit = 1.5;

    Demodulator(const DemodConfig& config, double input_rate_hz);
    ~Demodulator();
    Demodulator(Demodulator&&) noexcept;
    Demodulator& operator=(Demodulator&&) noexcept;

    AudioBlock process(std::span<const Sample> in);
    void reset();

    const DemodConfig& config() const noexcept { return config_; }
    double input_rate_hz() const noexcept { return input_rate_; }

private:
    struct Impl;
    DemodConfig config_;
    double input_rate_;
    std::unique_ptr<Impl> impl_;
};

// One-shot helpers over whole blocks; each builds a fresh demodulator.
AudioBlock demod_fm(const IqBlock& block, const DemodConfig& config);
AudioBlock demod_am(const IqBlock& block, const DemodConfig& config);
AudioBlock demod_dsb(const IqBlock& block, const DemodConfig& config);
AudioBlock demod_ssb(const IqBlock& block, const DemodConfig& config, bool upper);

}  // namespace sdrtk
