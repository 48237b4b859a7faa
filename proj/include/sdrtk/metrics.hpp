#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sdrtk/types.hpp"

namespace sdrtk {

inline constexpr double kDbFloor = -200.0;

/// Power spectrum in dB relative to a full-scale sine, bin 0 at center - span/2.
struct SpectrumFrame {
    double center_hz = 0.0;
    double span_hz = 0.0;
    std::size_t fft_size = 0;
    std::vector<double> bins;

    double bin_width_hz() const { return span_hz / static_cast<double>(fft_size); }
    double bin_frequency_hz(std::size_t bin) const;  // absolute
    std::size_t peak_bin() const;
};

struct WelchOptions {
    std::size_t fft_size = 4096;
    WindowKind window = WindowKind::BlackmanHarris4;
    double overlap = 0.5;
};

/// Averaged periodogram, fftshifted; linear power with coherent-gain calibration
/// (a full-scale complex tone reads 1.0). Returns also the segment count.
struct LinearSpectrum {
    std::vector<double> power;
    std::size_t segments = 0;
    double enbw_bins = 1.0;  // equivalent noise bandwidth of the window in bins
};
LinearSpectrum welch_linear(std::span<const Sample> samples, const WelchOptions& options);

SpectrumFrame power_spectrum(const IqBlock& block, std::size_t fft_size, WindowKind window);
std::vector<SpectrumFrame> spectrogram(const IqBlock& block, std::size_t fft_size, std::size_t hop,
                                       WindowKind window = WindowKind::BlackmanHarris4);

/// In-band SNR of a signal occupying [signal_center_hz - bw/2, signal_center_hz + bw/2] (absolute Hz).
/// Noise density is the median over bins further than bw from the signal center.
double estimate_snr(const IqBlock& block, double signal_center_hz, double signal_bw_hz,
                    const WelchOptions& options = {});

enum class Quality { Strong, Medium, Weak };
inline constexpr double kStrongThresholdDb = 20.0;
inline constexpr double kMediumThresholdDb = 10.0;

Quality classify_quality(double snr_db);
std::string to_string(Quality q);

/// Width of the band that leaves (1 - fraction)/2 of the total power outside each edge.
double occupied_bandwidth(const IqBlock& block, double fraction = 0.99, const WelchOptions& options = {});

// Audio-domain measurements on real signals.
/// Tone power (bins within +/- 3 main-lobe widths of tone_hz) over residual power in [low_hz, high_hz].
double audio_tone_snr_db(std::span<const double> audio, double rate_hz, double tone_hz, double low_hz,
                         double high_hz);
/// Least-squares sinusoid fit at tone_hz; returns 10 log10(residual power / total power).
double thd_plus_noise_db(std::span<const double> audio, double rate_hz, double tone_hz);

/// Normalized correlation (Pearson) of y against x, maximized over lags 0..max_lag where
/// y is delayed by `lag` relative to x. Returns {corr, lag}.
struct LagCorrelation {
    double correlation = 0.0;
    std::size_t lag = 0;
};
LagCorrelation best_lag_correlation(std::span<const double> x, std::span<const double> y, std::size_t max_lag,
                                    std::size_t skip = 0);

}  // namespace sdrtk
