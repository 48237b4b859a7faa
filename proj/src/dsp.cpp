#include "sdrtk/dsp.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sdrtk/error.hpp"

namespace sdrtk {

namespace {

constexpr std::array<double, 3> kBlackman = {0.42, 0.5, 0.08};
constexpr std::array<double, 4> kBlackmanHarris4 = {0.35875, 0.48829, 0.14128, 0.01168};
// 7-term minimum-sidelobe Blackman-Harris set.
constexpr std::array<double, 7> kBlackmanHarris7 = {0.27105140069342, 0.43329793923448, 0.21812299954311,
                                                    0.06592544638803, 0.01081174209837, 0.00077658482522,
                                                    0.00001388721735};

}  // namespace

std::span<const double> window_coefficients(WindowKind kind) {
    switch (kind) {
        case WindowKind::Blackman: return kBlackman;
        case WindowKind::BlackmanHarris4: return kBlackmanHarris4;
        case WindowKind::BlackmanHarris7: return kBlackmanHarris7;
    }
    throw ValueError("unknown window kind");
}

double mainlobe_halfwidth_bins(WindowKind kind) {
    // A K-term cosine sum has its first null K bins from the peak.
    return static_cast<double>(window_coefficients(kind).size());
}

std::vector<double> window(WindowKind kind, std::size_t n_taps) {
    if (n_taps < 2) throw ValueError("window length must be at least 2, got " + std::to_string(n_taps));
    const auto a = window_coefficients(kind);
    std::vector<double> w(n_taps);
    const double denom = static_cast<double>(n_taps - 1);
    for (std::size_t k = 0; k < n_taps; ++k) {
        // Fold onto the first half so w[k] == w[n-1-k] bit for bit.
        const std::size_t kk = std::min(k, n_taps - 1 - k);
        double acc = 0.0;
        double sign = 1.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            acc += sign * a[i] * std::cos(2.0 * std::numbers::pi * static_cast<double>(i * kk) / denom);
            sign = -sign;
        }
        w[k] = acc;
    }
    return w;
}

std::vector<double> design_lowpass(const FilterSpec& spec, double sample_rate_hz) {
    if (spec.order < 2) throw ValueError("filter order must be at least 2");
    if (!(sample_rate_hz > 0.0)) throw ValueError("sample rate must be positive");
    if (!(spec.cutoff_hz > 0.0) || spec.cutoff_hz >= sample_rate_hz / 2.0) {
        throw ValueError("cutoff " + std::to_string(spec.cutoff_hz) + " Hz must lie in (0, Nyquist=" +
                         std::to_string(sample_rate_hz / 2.0) + ")");
    }
    const std::size_t n = spec.order + 1;
    const auto w = window(spec.window, n);
    const double fc = spec.cutoff_hz / sample_rate_hz;  // cycles/sample
    const double mid = static_cast<double>(spec.order) / 2.0;
    std::vector<double> taps(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t kk = std::min(k, n - 1 - k);
        const double t = static_cast<double>(kk) - mid;
        const double x = 2.0 * fc * t;
        const double sinc = (t == 0.0) ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        taps[k] = 2.0 * fc * sinc * w[k];
    }
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (auto& t : taps) t /= sum;
    return taps;
}

std::size_t order_for_transition(WindowKind kind, double transition_hz, double sample_rate_hz) {
    if (!(transition_hz > 0.0)) throw ValueError("transition width must be positive");
    const double taps = mainlobe_halfwidth_bins(kind) * sample_rate_hz / transition_hz;
    auto order = static_cast<std::size_t>(std::ceil(taps));
    if (order % 2) ++order;
    return std::max<std::size_t>(order, 2);
}

// --- polyphase decimator -------------------------------------------------------------------

namespace {

// Four independent partial sums keep the FMA pipeline busy without -ffast-math.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    for (; j < n; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

RealDecimator::RealDecimator(std::vector<double> taps, std::size_t factor) : taps_(std::move(taps)), factor_(factor) {
    if (factor_ == 0) throw ValueError("decimation factor must be at least 1");
    if (taps_.empty()) throw ValueError("decimator needs at least one tap");
    branch_len_ = (taps_.size() + factor_ - 1) / factor_;
    branch_taps_.assign(factor_ * branch_len_, 0.0);
    for (std::size_t k = 0; k < taps_.size(); ++k) {
        branch_taps_[(k % factor_) * branch_len_ + k / factor_] = taps_[k];
    }
    reset();
}

void RealDecimator::reset() {
    branch_delay_.assign(factor_ * 2 * branch_len_, 0.0);
    branch_pos_.assign(factor_, 0);
    phase_ = 0;
    input_count_ = 0;
    output_count_ = 0;
}

void RealDecimator::process(std::span<const double> in, std::vector<double>& out) {
    const std::size_t len = branch_len_;
    for (double x : in) {
        // Sample n with n % factor == r feeds branch (factor - r) % factor; at output time
        // branch p's newest sample is x[n - p] and its j-th newest is x[n - p - j*factor].
        const std::size_t p = phase_ == 0 ? 0 : factor_ - phase_;
        double* delay = branch_delay_.data() + p * 2 * len;
        std::size_t& pos = branch_pos_[p];
        pos = (pos == 0) ? len - 1 : pos - 1;
        delay[pos] = x;
        delay[pos + len] = x;
        ++input_count_;
        if (phase_ == 0) {
            double acc = 0.0;
            for (std::size_t b = 0; b < factor_; ++b) {
                const double* g = branch_taps_.data() + b * len;
                const double* d = branch_delay_.data() + b * 2 * len + branch_pos_[b];
                acc += dot(g, d, len);
            }
            out.push_back(acc);
            ++output_count_;
        }
        phase_ = (phase_ + 1 == factor_) ? 0 : phase_ + 1;
    }
}

std::vector<double> RealDecimator::process(std::span<const double> in) {
    std::vector<double> out;
    out.reserve(in.size() / factor_ + 1);
    process(in, out);
    return out;
}

Decimator::Decimator(std::vector<double> taps, std::size_t factor) : re_(taps, factor), im_(std::move(taps), factor) {}

void Decimator::reset() {
    re_.reset();
    im_.reset();
}

void Decimator::process(std::span<const Sample> in, std::vector<Sample>& out) {
    in_re_.resize(in.size());
    in_im_.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) {
        in_re_[k] = in[k].real();
        in_im_[k] = in[k].imag();
    }
    out_re_.clear();
    out_im_.clear();
    re_.process(in_re_, out_re_);
    im_.process(in_im_, out_im_);
    out.reserve(out.size() + out_re_.size());
    for (std::size_t k = 0; k < out_re_.size(); ++k) out.emplace_back(out_re_[k], out_im_[k]);
}

std::vector<Sample> Decimator::process(std::span<const Sample> in) {
    std::vector<Sample> out;
    process(in, out);
    return out;
}

IqBlock fir_filter(FirFilter& state, const IqBlock& block) {
    IqBlock out = block;
    out.samples = state.process(block.samples);
    return out;
}

IqBlock decimate(Decimator& state, const IqBlock& block) {
    IqBlock out;
    out.sample_rate_hz = block.sample_rate_hz / static_cast<double>(state.factor());
    out.center_hz = block.center_hz;
    out.hardware_band = block.hardware_band;
    out.start_index = state.output_count();
    out.samples = state.process(block.samples);
    return out;
}

// --- mixer ---------------------------------------------------------------------------------

void mix_in_place(std::span<Sample> samples, double shift_hz, double sample_rate_hz, std::uint64_t start_index) {
    if (!(sample_rate_hz > 0.0)) throw ValueError("sample rate must be positive");
    if (!(std::abs(shift_hz) < sample_rate_hz / 2.0)) {
        throw ValueError("mixer shift " + std::to_string(shift_hz) + " Hz outside +/- Nyquist (" +
                         std::to_string(sample_rate_hz / 2.0) + " Hz)");
    }
    if (shift_hz == 0.0) return;
    constexpr std::size_t kAnchor = 256;
    const long double cycles_per_sample = static_cast<long double>(shift_hz) / sample_rate_hz;
    const double step_angle = -2.0 * std::numbers::pi * static_cast<double>(cycles_per_sample);
    const Sample step = std::polar(1.0, step_angle);
    for (std::size_t base = 0; base < samples.size(); base += kAnchor) {
        // Re-anchor from the absolute index so rounding never accumulates across blocks.
        const long double n = static_cast<long double>(start_index + base);
        const long double frac = n * cycles_per_sample - std::floor(n * cycles_per_sample);
        Sample rot = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(frac));
        const std::size_t end = std::min(samples.size(), base + kAnchor);
        for (std::size_t k = base; k < end; ++k) {
            samples[k] *= rot;
            rot *= step;
        }
    }
}

IqBlock mix(const IqBlock& block, double shift_hz) {
    IqBlock out = block;
    mix_in_place(out.samples, shift_hz, block.sample_rate_hz, block.start_index);
    return out;
}

// --- interpolation -------------------------------------------------------------------------

template <typename T>
void LinearInterpolator<T>::process(std::span<const T> in, std::vector<T>& out) {
    const long double ratio = static_cast<long double>(in_rate_) / out_rate_;
    for (const T& x : in) {
        const std::uint64_t i = in_count_++;
        if (!have_prev_) {
            prev_ = x;
            have_prev_ = true;
            continue;
        }
        // Emit every output whose position lies in [i - 1, i).
        for (;;) {
            const long double pos = static_cast<long double>(out_index_) * ratio;
            if (pos >= static_cast<long double>(i)) break;
            const double frac = static_cast<double>(pos - static_cast<long double>(i - 1));
            out.push_back(prev_ + (x - prev_) * frac);
            ++out_index_;
        }
        prev_ = x;
    }
}

template class LinearInterpolator<double>;
template class LinearInterpolator<Sample>;

}  // namespace sdrtk
