#include <chrono>
#include <numeric>

#include "doctest.h"
#include "sdrtk/dsp.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/fft.hpp"
#include "support.hpp"

using namespace sdrtk;
namespace ts = testing_support;

namespace {

// Peak sidelobe in dB relative to the DC peak: dense DTFT, first null found by descent.
double peak_sidelobe_db(const std::vector<double>& w) {
    const std::size_t grid = 64 * w.size();
    std::vector<double> mag(grid / 2);
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = ts::dtft_mag(w, static_cast<double>(i) / grid);
    std::size_t k = 1;
    while (k + 1 < mag.size() && mag[k + 1] < mag[k]) ++k;
    const double side = *std::max_element(mag.begin() + static_cast<std::ptrdiff_t>(k), mag.end());
    return 20.0 * std::log10(side / mag[0]);
}

}  // namespace

TEST_CASE("window shape properties") {
    for (auto kind : kAllWindows) {
        CAPTURE(to_string(kind));
        for (std::size_t n : {2u, 3u, 64u, 65u, 1001u}) {
            const auto w = window(kind, n);
            REQUIRE(w.size() == n);
            for (std::size_t k = 0; k < n; ++k) REQUIRE(w[k] == doctest::Approx(w[n - 1 - k]).epsilon(1e-14));
        }
        const auto c = window_coefficients(kind);
        CHECK(std::accumulate(c.begin(), c.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    }
    const auto b = window(WindowKind::Blackman, 101);
    CHECK(std::abs(b[50] - 1.0) < 1e-12);
    CHECK(std::abs(b[0]) < 1e-12);
    const auto h = window(WindowKind::BlackmanHarris4, 101);
    CHECK(std::abs(h[50] - 1.0) < 1e-12);
    CHECK(std::abs(h[0] - 6.0e-5) < 1e-9);
    CHECK_THROWS_AS(window(WindowKind::Blackman, 1), ValueError);
}

TEST_CASE("window peak sidelobes") {
    CHECK(peak_sidelobe_db(window(WindowKind::Blackman, 128)) <= -57.0);
    CHECK(peak_sidelobe_db(window(WindowKind::BlackmanHarris4, 128)) <= -90.0);
    CHECK(peak_sidelobe_db(window(WindowKind::BlackmanHarris7, 128)) <= -150.0);
}

TEST_CASE("lowpass design contract") {
    const double fs = 48000.0;
    for (auto kind : kAllWindows) {
        const auto h = design_lowpass({200, fs / 8, kind}, fs);
        REQUIRE(h.size() == 201);
        CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t k = 0; k <= 200; ++k) REQUIRE(h[k] == h[200 - k]);
    }
    const auto h = design_lowpass({200, fs / 8, WindowKind::BlackmanHarris4}, fs);
    CHECK(std::abs(20 * std::log10(ts::dtft_mag(h, 0.9 / 8))) <= 0.5);
    CHECK(20 * std::log10(ts::dtft_mag(h, 2.0 / 8)) <= -60.0);
    CHECK_THROWS_AS(design_lowpass({200, fs / 2, WindowKind::Blackman}, fs), ValueError);
    CHECK_THROWS_AS(design_lowpass({1, 1000, WindowKind::Blackman}, fs), ValueError);
}

TEST_CASE("order for a transition width") {
    // BH4 main lobe spans 4 bins: 4 * 48000 / 200 = 960 taps.
    CHECK(order_for_transition(WindowKind::BlackmanHarris4, 200.0, 48000.0) == 960);
    CHECK(order_for_transition(WindowKind::Blackman, 1000.0, 1000.0) % 2 == 0);
}

TEST_CASE("streaming FIR matches direct convolution") {
    const auto h = design_lowpass({64, 3000, WindowKind::BlackmanHarris4}, 48000);
    SUBCASE("impulse gives the taps") {
        std::vector<Sample> x(h.size() + 10);
        x[0] = 1.0;
        FirFilter f(h);
        const auto y = f.process(x);
        for (std::size_t k = 0; k < h.size(); ++k) REQUIRE(y[k].real() == doctest::Approx(h[k]).epsilon(1e-14));
    }
    SUBCASE("DC settles to one") {
        std::vector<Sample> x(500, Sample{1.0, 0.0});
        FirFilter f(h);
        const auto y = f.process(x);
        CHECK(std::abs(y.back() - Sample{1.0, 0.0}) < 1e-6);
    }
    SUBCASE("any block split equals the direct result") {
        const auto x = ts::complex_noise(3000, 11);
        const auto ref = ts::naive_fir<std::complex<double>>(h, x);
        std::mt19937 g(3);
        for (int trial = 0; trial < 5; ++trial) {
            FirFilter f(h);
            std::vector<Sample> y;
            std::size_t pos = 0;
            while (pos < x.size()) {
                const std::size_t n = std::min<std::size_t>(x.size() - pos, 1 + g() % 700);
                const auto part = f.process(std::span<const Sample>(x).subspan(pos, n));
                y.insert(y.end(), part.begin(), part.end());
                pos += n;
            }
            REQUIRE(y.size() == ref.size());
            CHECK(ts::rms_diff<Sample>(y, ref) < 1e-12);
        }
    }
}

TEST_CASE("polyphase decimator equals filter then downsample") {
    const auto x = ts::complex_noise(20000, 21);
    for (std::size_t factor : {1u, 2u, 3u, 10u, 25u}) {
        CAPTURE(factor);
        const auto h = design_lowpass({150, 0.4 * 48000 / factor, WindowKind::BlackmanHarris7}, 48000);
        const auto full = ts::naive_fir<std::complex<double>>(h, x);
        std::vector<Sample> ref;
        for (std::size_t n = 0; n < full.size(); n += factor) ref.push_back(full[n]);

        Decimator d(h, factor);
        std::vector<Sample> y;
        std::mt19937 g(static_cast<unsigned>(factor));
        std::size_t pos = 0;
        while (pos < x.size()) {
            const std::size_t n = std::min<std::size_t>(x.size() - pos, 1 + g() % 999);
            d.process(std::span<const Sample>(x).subspan(pos, n), y);
            pos += n;
        }
        REQUIRE(y.size() == ref.size());
        CHECK(ts::rms_diff<Sample>(y, ref) < 1e-9);
    }
    CHECK_THROWS_AS(Decimator({1.0, 1.0}, 0), ValueError);
}

TEST_CASE("decimate block bookkeeping") {
    Decimator d(design_lowpass({100, 2000, WindowKind::Blackman}, 48000), 4);
    IqBlock b;
    b.samples.assign(65536, Sample{});
    b.sample_rate_hz = 48000;
    const auto o = decimate(d, b);
    CHECK(o.samples.size() == 16384);
    CHECK(o.sample_rate_hz == 12000);
    // Odd block lengths: outputs are ceil-aligned to the stream.
    b.samples.assign(5, Sample{});
    const auto o2 = decimate(d, b);
    CHECK(o2.start_index == 16384);
    CHECK(o2.samples.size() == 2);  // inputs 65536..65540 hold outputs at 65536 and 65540
}

TEST_CASE("real decimator tracks counts") {
    RealDecimator r(design_lowpass({20, 1000, WindowKind::Blackman}, 8000), 3);
    std::vector<double> x(10, 1.0);
    const auto y = r.process(x);
    CHECK(y.size() == 4);
    CHECK(r.input_count() == 10);
    CHECK(r.output_count() == 4);
    r.reset();
    CHECK(r.input_count() == 0);
}

TEST_CASE("mixer translation and continuity") {
    const double fs = 240000.0;
    const auto x = ts::complex_tone(10000.0, fs, 4096, 0.7);
    IqBlock b;
    b.samples = x;
    b.sample_rate_hz = fs;

    const auto y = mix(b, 10000.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        REQUIRE(std::abs(y.samples[k] - Sample{0.7, 0.0}) < 1e-9);
        REQUIRE(std::abs(y.samples[k]) == doctest::Approx(std::abs(x[k])).epsilon(1e-14));
    }

    const auto a = ts::complex_noise(10000, 2);
    b.samples = a;
    const auto twice = mix(mix(b, 3000.0), 4500.0);
    const auto once = mix(b, 7500.0);
    CHECK(ts::rms_diff<Sample>(twice.samples, once.samples) < 1e-9);
    const auto back = mix(mix(b, 12345.0), -12345.0);
    CHECK(ts::rms_diff<Sample>(back.samples, a) < 1e-9);

    // Split into two blocks at an arbitrary point, carried by start_index.
    IqBlock first, second;
    first.samples.assign(a.begin(), a.begin() + 3333);
    second.samples.assign(a.begin() + 3333, a.end());
    first.sample_rate_hz = second.sample_rate_hz = fs;
    second.start_index = 3333;
    auto p1 = mix(first, 7500.0).samples;
    const auto p2 = mix(second, 7500.0).samples;
    p1.insert(p1.end(), p2.begin(), p2.end());
    CHECK(ts::rms_diff<Sample>(p1, once.samples) < 1e-12);

    CHECK_THROWS_AS(mix(b, fs / 2), ValueError);

    // Far into a long stream the phase still follows the absolute index.
    IqBlock late;
    late.samples.assign(8, Sample{1.0, 0.0});
    late.sample_rate_hz = fs;
    late.start_index = 3'000'000'000ULL;
    const auto l = mix(late, 1000.0);
    for (std::size_t k = 0; k < 8; ++k) {
        const long double ph = -2.0L * std::numbers::pi_v<long double> * 1000.0L * (late.start_index + k) / fs;
        REQUIRE(std::abs(l.samples[k] - std::polar(1.0, static_cast<double>(std::fmod(ph, 2 * std::numbers::pi_v<long double>)))) < 1e-7);
    }
}

TEST_CASE("linear interpolator hits exact positions") {
    LinearInterpolator<double> up(48000.0, 240000.0);
    std::vector<double> ramp(100);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    std::vector<double> out;
    up.process(std::span<const double>(ramp).subspan(0, 37), out);
    up.process(std::span<const double>(ramp).subspan(37), out);
    REQUIRE(out.size() >= 490);
    for (std::size_t m = 0; m < out.size(); ++m) REQUIRE(out[m] == doctest::Approx(m / 5.0).epsilon(1e-12));
}

TEST_CASE("FFT agrees with a direct DFT") {
    for (std::size_t n : {8u, 64u, 256u}) {
        auto x = ts::complex_noise(n, n);
        const auto ref = ts::naive_dft(x);
        Fft fft(n);
        fft.forward(x);
        CHECK(ts::rms_diff<Sample>(x, ref) < 1e-9 * std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("decimation throughput at the tuner ceiling") {
    Decimator d(design_lowpass({1000, 20000, WindowKind::BlackmanHarris4}, 2.4e6), 10);
    const auto x = ts::complex_noise(1 << 20, 9);
    std::vector<Sample> y;
    const auto t0 = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 3; ++rep) {
        y.clear();
        d.process(x, y);
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double rate = 3.0 * x.size() / s;
    MESSAGE("decimator: " << rate / 1e6 << " MS/s");
    CHECK(rate >= 2.4e6);
}
