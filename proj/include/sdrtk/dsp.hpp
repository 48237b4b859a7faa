#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdrtk/types.hpp"

namespace sdrtk {

/// Symmetric cosine-sum window: w[k] = sum_i (-1)^i a_i cos(2 pi i k / (n - 1)).
std::vector<double> window(WindowKind kind, std::size_t n_taps);
std::span<const double> window_coefficients(WindowKind kind);
/// Half-width of the window's main lobe in DFT bins (the first null).
double mainlobe_halfwidth_bins(WindowKind kind);

struct FilterSpec {
    std::size_t order = 1000;  // tap count is order + 1
    double cutoff_hz = 0.0;
    WindowKind window = WindowKind::BlackmanHarris4;
};

/// Windowed-sinc linear-phase low-pass, normalized to unity DC gain.
std::vector<double> design_lowpass(const FilterSpec& spec, double sample_rate_hz);

/// Smallest even order whose main lobe keeps the transition band within +/- transition_hz of the cutoff.
std::size_t order_for_transition(WindowKind kind, double transition_hz, double sample_rate_hz);

/// Streaming polyphase decimator for real samples. The input is split across `factor`
/// commutator branches; each output costs taps.size() multiply-adds, i.e.
/// taps.size()/factor per input sample. Outputs are produced at input indices n with
/// n % factor == 0, counted from the first sample ever pushed.
class RealDecimator {
public:
    RealDecimator() = default;
    RealDecimator(std::vector<double> taps, std::size_t factor);

    void process(std::span<const double> in, std::vector<double>& out);
    std::vector<double> process(std::span<const double> in);
    void reset();

    std::size_t factor() const noexcept { return factor_; }
    const std::vector<double>& taps() const noexcept { return taps_; }
    std::uint64_t input_count() const noexcept { return input_count_; }
    std::uint64_t output_count() const noexcept { return output_count_; }

private:
    std::vector<double> taps_;
    std::size_t factor_ = 1;
    std::size_t branch_len_ = 0;
    std::vector<double> branch_taps_;   // factor x branch_len, branch p holds taps[p + j*factor]
    std::vector<double> branch_delay_;  // factor x 2*branch_len double-buffered delay lines
    std::vector<std::size_t> branch_pos_;
    std::size_t phase_ = 0;
    std::uint64_t input_count_ = 0;
    std::uint64_t output_count_ = 0;
};

/// Complex decimator: the same real taps applied to I and Q independently.
class Decimator {
public:
    Decimator() = default;
    Decimator(std::vector<double> taps, std::size_t factor);

    void process(std::span<const Sample> in, std::vector<Sample>& out);
    std::vector<Sample> process(std::span<const Sample> in);
    void reset();

    std::size_t factor() const noexcept { return re_.factor(); }
    const std::vector<double>& taps() const noexcept { return re_.taps(); }
    std::uint64_t output_count() const noexcept { return re_.output_count(); }

private:
    RealDecimator re_, im_;
    std::vector<double> in_re_, in_im_, out_re_, out_im_;
};

/// Streaming FIR filter (a decimator with factor 1).
class FirFilter {
public:
    FirFilter() = default;
    explicit FirFilter(std::vector<double> taps) : dec_(std::move(taps), 1) {}

    std::vector<Sample> process(std::span<const Sample> in) { return dec_.process(in); }
    void reset() { dec_.reset(); }
    const std::vector<double>& taps() const noexcept { return dec_.taps(); }

private:
    Decimator dec_;
};

IqBlock fir_filter(FirFilter& state, const IqBlock& block);
IqBlock decimate(Decimator& state, const IqBlock& block);

/// Multiplies sample k by exp(-j 2 pi shift_hz (start_index + k) / fs): a signal at +shift_hz lands at DC.
/// Phase is a function of the absolute sample index, so consecutive blocks join continuously.
IqBlock mix(const IqBlock& block, double shift_hz);
void mix_in_place(std::span<Sample> samples, double shift_hz, double sample_rate_hz, std::uint64_t start_index);

/// Linear interpolator from a low input rate to a higher output rate, streaming.
/// Output sample m sits at input position m * in_rate / out_rate.
template <typename T>
class LinearInterpolator {
public:
    LinearInterpolator() = default;
    LinearInterpolator(double in_rate_hz, double out_rate_hz) : in_rate_(in_rate_hz), out_rate_(out_rate_hz) {}

    void process(std::span<const T> in, std::vector<T>& out);
    void reset() {
        out_index_ = 0;
        in_count_ = 0;
        have_prev_ = false;
    }

private:
    double in_rate_ = 1.0, out_rate_ = 1.0;
    std::uint64_t out_index_ = 0;  // next output sample to produce
    std::uint64_t in_count_ = 0;   // input samples consumed so far
    T prev_{};                     // input sample in_count_ - 1
    bool have_prev_ = false;
};

}  // namespace sdrtk
