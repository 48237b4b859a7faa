#include "sdrtk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sdrtk/dsp.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/fft.hpp"

namespace sdrtk {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

double to_db(double p) { return std::max(kDbFloor, 10.0 * std::log10(std::max(p, 1e-30))); }

}  // namespace

double SpectrumFrame::bin_frequency_hz(std::size_t bin) const {
    return center_hz - span_hz / 2.0 + static_cast<double>(bin) * bin_width_hz();
}

std::size_t SpectrumFrame::peak_bin() const {
    return static_cast<std::size_t>(std::distance(bins.begin(), std::max_element(bins.begin(), bins.end())));
}

LinearSpectrum welch_linear(std::span<const Sample> samples, const WelchOptions& options) {
    const std::size_t n = options.fft_size;
    if (!is_pow2(n)) throw ValueError("FFT size must be a power of two, got " + std::to_string(n));
    if (samples.size() < n) {
        throw ValueError("block of " + std::to_string(samples.size()) + " samples shorter than FFT size " +
                         std::to_string(n));
    }
    const auto w = window(options.window, n);
    const double sum_w = std::accumulate(w.begin(), w.end(), 0.0);
    const double sum_w2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * (1.0 - options.overlap))));

    LinearSpectrum out;
    out.power.assign(n, 0.0);
    out.enbw_bins = static_cast<double>(n) * sum_w2 / (sum_w * sum_w);
    Fft fft(n);
    std::vector<Sample> buf(n);
    for (std::size_t start = 0; start + n <= samples.size(); start += hop) {
        for (std::size_t k = 0; k < n; ++k) buf[k] = samples[start + k] * w[k];
        fft.forward(buf);
        for (std::size_t k = 0; k < n; ++k) out.power[k] += std::norm(buf[k]);
        ++out.segments;
    }
    const double scale = 1.0 / (static_cast<double>(out.segments) * sum_w * sum_w);
    std::vector<double> shifted(n);
    for (std::size_t k = 0; k < n; ++k) shifted[k] = out.power[(k + n / 2) % n] * scale;
    out.power = std::move(shifted);
    return out;
}

SpectrumFrame power_spectrum(const IqBlock& block, std::size_t fft_size, WindowKind window_kind) {
    const auto lin = welch_linear(block.samples, {fft_size, window_kind, 0.5});
    SpectrumFrame frame;
    frame.center_hz = block.center_hz;
    frame.span_hz = block.sample_rate_hz;
    frame.fft_size = fft_size;
    frame.bins.resize(fft_size);
    std::transform(lin.power.begin(), lin.power.end(), frame.bins.begin(), to_db);
    return frame;
}

std::vector<SpectrumFrame> spectrogram(const IqBlock& block, std::size_t fft_size, std::size_t hop,
                                       WindowKind window_kind) {
    if (hop == 0) throw ValueError("spectrogram hop must be at least 1");
    if (!is_pow2(fft_size)) throw ValueError("FFT size must be a power of two");
    if (block.samples.size() < fft_size) throw ValueError("block shorter than FFT size");
    const std::size_t count = (block.samples.size() - fft_size) / hop + 1;
    std::vector<SpectrumFrame> frames;
    frames.reserve(count);
    const std::span<const Sample> all(block.samples);
    for (std::size_t t = 0; t < count; ++t) {
        const auto lin = welch_linear(all.subspan(t * hop, fft_size), {fft_size, window_kind, 0.5});
        SpectrumFrame f;
        f.center_hz = block.center_hz;
        f.span_hz = block.sample_rate_hz;
        f.fft_size = fft_size;
        f.bins.resize(fft_size);
        std::transform(lin.power.begin(), lin.power.end(), f.bins.begin(), to_db);
        frames.push_back(std::move(f));
    }
    return frames;
}

double estimate_snr(const IqBlock& block, double signal_center_hz, double signal_bw_hz, const WelchOptions& options) {
    const double fs = block.sample_rate_hz;
    const double offset = signal_center_hz - block.center_hz;
    if (!(signal_bw_hz > 0.0)) throw ValueError("signal bandwidth must be positive");
    if (std::abs(offset) + signal_bw_hz > fs / 2.0) {
        throw ValueError("signal band " + std::to_string(signal_center_hz) + " Hz +/- " +
                         std::to_string(signal_bw_hz) + " Hz (with guard) outside the capture span");
    }
    WelchOptions opt = options;
    if (block.samples.size() < opt.fft_size) opt.fft_size = floor_pow2(block.samples.size());
    if (opt.fft_size < 64) throw ValueError("block too short for an SNR estimate");
    const auto lin = welch_linear(block.samples, opt);
    const std::size_t n = opt.fft_size;
    const double bin_w = fs / static_cast<double>(n);

    std::vector<double> in_band, outside;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = (static_cast<double>(k) - static_cast<double>(n / 2)) * bin_w;
        const double d = std::abs(f - offset);
        if (d <= signal_bw_hz / 2.0) {
            in_band.push_back(lin.power[k]);
        } else if (d > signal_bw_hz) {
            outside.push_back(lin.power[k]);
        }
    }
    if (in_band.empty() || outside.size() < 8) {
        throw ValueError("not enough spectral bins to separate signal and noise");
    }
    // Per-Hz densities: a bin holds power * (1 / enbw) over bin_w Hz.
    const double to_density = 1.0 / (lin.enbw_bins * bin_w);
    const double mean_in = std::accumulate(in_band.begin(), in_band.end(), 0.0) / in_band.size();
    auto mid = outside.begin() + outside.size() / 2;
    std::nth_element(outside.begin(), mid, outside.end());
    const double median_out = *mid;
    const double signal_plus_noise = mean_in * to_density * signal_bw_hz;
    const double noise = std::max(median_out * to_density * signal_bw_hz, 1e-30);
    constexpr double kEps = 1e-12;
    return 10.0 * std::log10(std::max(signal_plus_noise - noise, kEps * noise) / noise);
}

Quality classify_quality(double snr_db) {
    if (std::isnan(snr_db)) throw ValueError("SNR must be a number");
    if (snr_db >= kStrongThresholdDb) return Quality::Strong;
    if (snr_db >= kMediumThresholdDb) return Quality::Medium;
    return Quality::Weak;
}

std::string to_string(Quality q) {
    switch (q) {
        case Quality::Strong: return "Strong";
        case Quality::Medium: return "Medium";
        case Quality::Weak: return "Weak";
    }
    return "?";
}

double occupied_bandwidth(const IqBlock& block, double fraction, const WelchOptions& options) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValueError("fraction must lie in (0, 1)");
    const auto lin = welch_linear(block.samples, options);
    const double total = std::accumulate(lin.power.begin(), lin.power.end(), 0.0);
    if (!(total > 0.0)) return 0.0;
    const double tail = (1.0 - fraction) / 2.0 * total;
    const std::size_t n = lin.power.size();
    std::size_t lo = 0, hi = n - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += lin.power[k];
        if (acc > tail) {
            lo = k;
            break;
        }
    }
    acc = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        acc += lin.power[k];
        if (acc > tail) {
            hi = k;
            break;
        }
    }
    const double bin_w = block.sample_rate_hz / static_cast<double>(n);
    return hi >= lo ? static_cast<double>(hi - lo) * bin_w : 0.0;
}

double audio_tone_snr_db(std::span<const double> audio, double rate_hz, double tone_hz, double low_hz,
                         double high_hz) {
    if (audio.size() < 256) throw ValueError("audio too short for a tone SNR estimate");
    std::vector<Sample> z(audio.begin(), audio.end());
    const std::size_t n = std::min<std::size_t>(8192, floor_pow2(audio.size()));
    const auto lin = welch_linear(z, {n, WindowKind::BlackmanHarris4, 0.5});
    const double bin_w = rate_hz / static_cast<double>(n);
    const double tone_half = (mainlobe_halfwidth_bins(WindowKind::BlackmanHarris4) + 1.0) * bin_w;
    double tone = 0.0, rest = 0.0;
    for (std::size_t k = n / 2; k < n; ++k) {
        const double f = (static_cast<double>(k) - static_cast<double>(n / 2)) * bin_w;
        if (std::abs(f - tone_hz) <= tone_half) {
            tone += lin.power[k];
        } else if (f >= low_hz && f <= high_hz) {
            rest += lin.power[k];
        }
    }
    return 10.0 * std::log10(std::max(tone, 1e-30) / std::max(rest, 1e-30));
}

double thd_plus_noise_db(std::span<const double> audio, double rate_hz, double tone_hz) {
    const std::size_t n = audio.size();
    if (n < 16) throw ValueError("audio too short");
    // Least squares on [cos, sin, 1] via the 3x3 normal equations.
    double m[3][3] = {}, r[3] = {};
    const double w = 2.0 * std::numbers::pi * tone_hz / rate_hz;
    for (std::size_t k = 0; k < n; ++k) {
        const double b[3] = {std::cos(w * k), std::sin(w * k), 1.0};
        for (int i = 0; i < 3; ++i) {
            r[i] += b[i] * audio[k];
            for (int j = 0; j < 3; ++j) m[i][j] += b[i] * b[j];
        }
    }
    // Gaussian elimination.
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double f = m[j][i] / m[i][i];
            for (int c = i; c < 3; ++c) m[j][c] -= f * m[i][c];
            r[j] -= f * r[i];
        }
    }
    double coef[3];
    for (int i = 2; i >= 0; --i) {
        double s = r[i];
        for (int j = i + 1; j < 3; ++j) s -= m[i][j] * coef[j];
        coef[i] = s / m[i][i];
    }
    double residual = 0.0, total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = audio[k] - coef[2];
        const double fit = coef[0] * std::cos(w * k) + coef[1] * std::sin(w * k);
        residual += (x - fit) * (x - fit);
        total += x * x;
    }
    return 10.0 * std::log10(std::max(residual, 1e-30) / std::max(total, 1e-30));
}

LagCorrelation best_lag_correlation(std::span<const double> x, std::span<const double> y, std::size_t max_lag,
                                    std::size_t skip) {
    LagCorrelation best{-2.0, 0};
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        if (y.size() <= lag + skip) break;
        const std::size_t n = std::min(x.size(), y.size() - lag);
        if (n <= skip + 2) break;
        double mx = 0, my = 0;
        for (std::size_t i = skip; i < n; ++i) {
            mx += x[i];
            my += y[i + lag];
        }
        const double cnt = static_cast<double>(n - skip);
        mx /= cnt;
        my /= cnt;
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = skip; i < n; ++i) {
            const double a = x[i] - mx, b = y[i + lag] - my;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        const double c = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
        if (c > best.correlation) best = {c, lag};
    }
    if (best.correlation < -1.0) best.correlation = 0.0;
    return best;
}

}  // namespace sdrtk
