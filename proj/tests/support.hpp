#pragma once

// Independent reference implementations and fixtures for the tests. Nothing here
// calls into the library's DSP code.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace testing_support {

using cplx = std::complex<double>;

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "sdrtk-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::vector<cplx> complex_tone(double f_hz, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
    std::vector<cplx> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = std::polar(amp, 2.0 * std::numbers::pi * f_hz * k / fs + phase);
    return x;
}

inline std::vector<double> real_tone(double f_hz, double fs, std::size_t n, double amp = 1.0) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = amp * std::sin(2.0 * std::numbers::pi * f_hz * k / fs);
    return x;
}

// Direct convolution, zero initial state: y[n] = sum_k h[k] x[n-k].
template <class T>
std::vector<T> naive_fir(std::span<const double> h, std::span<const T> x) {
    std::vector<T> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        T acc{};
        for (std::size_t k = 0; k < h.size() && k <= n; ++k) acc += h[k] * x[n - k];
        y[n] = acc;
    }
    return y;
}

// |H(f)| of real taps by direct DTFT sum.
inline double dtft_mag(std::span<const double> h, double f_over_fs) {
    cplx acc{};
    for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * std::polar(1.0, -2.0 * std::numbers::pi * f_over_fs * k);
    return std::abs(acc);
}

// Power at one frequency by correlating with a complex exponential (normalized so a
// unit complex tone at f reads 1).
inline double tone_power(std::span<const cplx> x, double f_hz, double fs) {
    cplx acc{};
    for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * std::polar(1.0, -2.0 * std::numbers::pi * f_hz * k / fs);
    return std::norm(acc / static_cast<double>(x.size()));
}

inline double mean_power(std::span<const cplx> x) {
    double p = 0.0;
    for (const auto& z : x) p += std::norm(z);
    return p / static_cast<double>(x.size());
}

inline double rms(std::span<const double> x) {
    double p = 0.0;
    for (double v : x) p += v * v;
    return std::sqrt(p / static_cast<double>(x.size()));
}

template <class T>
double rms_diff(std::span<const T> a, std::span<const T> b) {
    double p = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) p += std::norm(a[i] - b[i]);
    return std::sqrt(p / static_cast<double>(n));
}

// Plain Pearson correlation of equal-length spans.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) ma += a[i], mb += b[i];
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Best Pearson correlation over integer delays of b relative to a, after dropping `skip`.
inline double best_corr(std::span<const double> a, std::span<const double> b, std::size_t max_lag, std::size_t skip) {
    double best = -1.0;
    for (std::size_t lag = 0; lag <= max_lag && lag + skip + 16 < b.size(); ++lag) {
        const std::size_t n = std::min(a.size(), b.size() - lag) - skip;
        best = std::max(best, pearson(a.subspan(skip, n), b.subspan(skip + lag, n)));
    }
    return best;
}

// Naive O(n^2) DFT, used as an FFT oracle on small sizes.
inline std::vector<cplx> naive_dft(std::span<const cplx> x) {
    const std::size_t n = x.size();
    std::vector<cplx> X(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        for (std::size_t t = 0; t < n; ++t) acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * k * t / n);
        X[k] = acc;
    }
    return X;
}

inline std::vector<cplx> complex_noise(std::size_t n, std::uint64_t seed, double variance = 1.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> d(0.0, std::sqrt(variance / 2.0));
    std::vector<cplx> x(n);
    for (auto& z : x) z = {d(g), d(g)};
    return x;
}

}  // namespace testing_support
