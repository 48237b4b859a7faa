#pragma once

#include <memory>
#include <span>
#include <vector>

#include "sdrtk/dsp.hpp"
#include "sdrtk/types.hpp"

namespace sdrtk {

struct TxConfig {
    DemodMode mode = DemodMode::NFM;
    double carrier_hz = 0.0;  // complex-baseband offset for I/Q modulators; pin frequency for the GPIO model
    double deviation_hz = 2500.0;
    double am_depth = 0.5;
    double sample_rate_hz = 240000.0;
    double audio_rate_hz = kAudioRateHz;
    double audio_bandwidth_hz = 5000.0;  // highest audio frequency carried
    double preemphasis_us = 0.0;         // FM only; inverse of the receiver's de-emphasis

    static TxConfig defaults(DemodMode mode, double sample_rate_hz);
    void validate() const;
};

/// Nominal occupied bandwidth: Carson's rule for FM, twice the audio bandwidth for AM/DSB,
/// the audio bandwidth for SSB.
double nominal_bandwidth_hz(DemodMode mode, double deviation_hz, double audio_bandwidth_hz);
inline double nominal_bandwidth_hz(const TxConfig& c) {
    return nominal_bandwidth_hz(c.mode, c.deviation_hz, c.audio_bandwidth_hz);
}

/// Streaming complex-baseband modulator. Audio arrives at audio_rate_hz and is linearly
/// interpolated to sample_rate_hz; the output is shifted to carrier_hz.
class Modulator {
public:
    explicit Modulator(const TxConfig& config);
    ~Modulator();
    Modulator(Modulator&&) noexcept;
    Modulator& operator=(Modulator&&) noexcept;

    std::vector<Sample> process(std::span<const double> audio);
    void reset();
    const TxConfig& config() const noexcept { return config_; }

private:
    struct Impl;
    TxConfig config_;
    std::unique_ptr<Impl> impl_;
};

std::vector<Sample> mod_fm(std::span<const double> audio, const TxConfig& config);
std::vector<Sample> mod_am(std::span<const double> audio, const TxConfig& config);
std::vector<Sample> mod_dsb(std::span<const double> audio, const TxConfig& config);
std::vector<Sample> mod_ssb(std::span<const double> audio, const TxConfig& config, bool upper);

/// Two-level clock-pin FM transmitter model: sign(sin(phase)) with instantaneous
/// frequency carrier_hz + deviation_hz * a[k]. Output values are exactly -1 or +1.
class GpioFmTransmitter {
public:
    explicit GpioFmTransmitter(const TxConfig& config);
    std::vector<double> process(std::span<const double> audio);
    void reset();

private:
    TxConfig config_;
    LinearInterpolator<double> interp_;
    double phase_ = 0.0;
    std::vector<double> scratch_;
};

std::vector<double> gpio_fm_waveform(std::span<const double> audio, const TxConfig& config);

}  // namespace sdrtk
