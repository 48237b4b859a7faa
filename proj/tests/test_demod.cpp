#include "doctest.h"
#include "sdrtk/demod.hpp"
#include "sdrtk/error.hpp"
#include "support.hpp"

using namespace sdrtk;
namespace ts = testing_support;

namespace {

constexpr double kFs = 48000.0;

IqBlock block_of(std::vector<Sample> s, double fs = kFs) {
    IqBlock b;
    b.samples = std::move(s);
    b.sample_rate_hz = fs;
    return b;
}

// FM by direct phase integration of the audio (test-side oracle, no library modulator).
std::vector<Sample> fm_signal(const std::vector<double>& audio, double dev, double fs) {
    std::vector<Sample> z(audio.size());
    double ph = 0.0;
    for (std::size_t k = 0; k < audio.size(); ++k) {
        z[k] = std::polar(1.0, ph);
        ph += 2.0 * std::numbers::pi * dev * audio[k] / fs;
    }
    return z;
}

std::span<const double> settled(const std::vector<double>& a, double seconds = 0.05) {
    const auto skip = static_cast<std::size_t>(seconds * kAudioRateHz);
    return std::span<const double>(a).subspan(skip);
}

double peak_frequency(std::span<const double> a, double fs, double lo, double hi) {
    double best = 0, best_f = 0;
    for (double f = lo; f <= hi; f += 10.0) {
        std::vector<Sample> z(a.begin(), a.end());
        const double p = ts::tone_power(z, f, fs);
        if (p > best) best = p, best_f = f;
    }
    return best_f;
}

}  // namespace

TEST_CASE("FM demodulation of a constant offset") {
    const auto cfg = DemodConfig::defaults(DemodMode::NFM);
    const auto out = demod_fm(block_of(ts::complex_tone(1000.0, kFs, 24000)), cfg);
    const auto s = settled(out.samples);
    for (double v : s) REQUIRE(v == doctest::Approx(0.4).epsilon(1e-6));

    const auto dc = demod_fm(block_of(std::vector<Sample>(24000, Sample{0.3, 0.4})), cfg);
    for (double v : dc.samples) REQUIRE(v == 0.0);

    std::vector<Sample> gaps = ts::complex_tone(500.0, kFs, 4800);
    std::fill(gaps.begin() + 1000, gaps.begin() + 2000, Sample{});
    for (double v : demod_fm(block_of(gaps), cfg).samples) REQUIRE(std::isfinite(v));
}

TEST_CASE("discriminator is linear across the band") {
    const double fs = 240000.0, dev = 2500.0;
    for (int i = -4; i <= 4; ++i) {
        const double f = 0.1 * i * fs / 2;
        CAPTURE(f);
        FmDiscriminator d(fs, dev);
        std::vector<double> y;
        d.process(ts::complex_tone(f, fs, 4096), y);
        double mean = 0;
        for (std::size_t k = 1; k < y.size(); ++k) mean += y[k];
        mean /= static_cast<double>(y.size() - 1);
        if (i == 0) {
            CHECK(std::abs(mean) < 1e-9);
        } else {
            CHECK(mean == doctest::Approx(f / dev).epsilon(1e-3));
        }
    }
}

TEST_CASE("FM loopback against a directly integrated signal") {
    auto cfg = DemodConfig::defaults(DemodMode::NFM);
    const auto audio = ts::real_tone(1000.0, kFs, 24000, 0.8);
    const auto out = demod_fm(block_of(fm_signal(audio, cfg.deviation_hz, kFs)), cfg);
    CHECK(ts::best_corr(audio, out.samples, 400, 2400) >= 0.999);
}

TEST_CASE("de-emphasis follows the single-pole response") {
    const double fs = 240000.0, tau = 50e-6;
    Deemphasis d(fs, tau);
    std::vector<double> step(200, 1.0);
    d.process(step);
    const double alpha = 1.0 - std::exp(-1.0 / (fs * tau));
    for (std::size_t n = 0; n < step.size(); ++n) {
        REQUIRE(step[n] == doctest::Approx(1.0 - std::pow(1.0 - alpha, n + 1.0)).epsilon(1e-12));
    }

    // WFM path: a 10 kHz tone is attenuated relative to 1 kHz by the single-pole magnitude.
    auto cfg = DemodConfig::defaults(DemodMode::WFM);
    auto gain_at = [&](double f) {
        const auto audio = ts::real_tone(f, fs, 48000, 0.5);
        const auto out = demod_fm(block_of(fm_signal(audio, cfg.deviation_hz, fs), fs), cfg);
        return ts::rms(settled(out.samples)) / ts::rms(audio);
    };
    auto pole = [&](double f) { return 1.0 / std::sqrt(1.0 + std::pow(2.0 * std::numbers::pi * f * tau, 2)); };
    const double measured = 20 * std::log10(gain_at(10000.0) / gain_at(1000.0));
    const double predicted = 20 * std::log10(pole(10000.0) / pole(1000.0));
    CHECK(measured == doctest::Approx(predicted).epsilon(0.05));
}

TEST_CASE("AM envelope detection") {
    const auto cfg = DemodConfig::defaults(DemodMode::AM);
    const auto audio = ts::real_tone(1000.0, kFs, 48000, 1.0);
    std::vector<Sample> z(audio.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = (1.0 + 0.5 * audio[k]) * std::polar(1.0, 0.7);
    const auto out = demod_am(block_of(z), cfg);
    const auto s = settled(out.samples, 0.25);
    CHECK(ts::rms(s) * std::sqrt(2.0) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(ts::best_corr(audio, out.samples, 400, 12000) >= 0.999);

    const auto carrier = demod_am(block_of(std::vector<Sample>(48000, Sample{0.8, 0.0})), cfg);
    CHECK(ts::rms(settled(carrier.samples, 0.25)) <= 1e-3);
    for (double v : demod_am(block_of(std::vector<Sample>(4800)), cfg).samples) REQUIRE(v == 0.0);
}

TEST_CASE("DSB product detection and its mistuning beat") {
    const auto cfg = DemodConfig::defaults(DemodMode::DSB);
    const auto audio = ts::real_tone(1000.0, kFs, 48000, 0.8);
    std::vector<Sample> z(audio.begin(), audio.end());
    const auto out = demod_dsb(block_of(z), cfg);
    CHECK(ts::best_corr(audio, out.samples, 400, 12000) >= 0.999);

    const auto shifted = ts::complex_tone(200.0, kFs, z.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] *= shifted[k];
    const auto beat = demod_dsb(block_of(z), cfg);
    const double f = peak_frequency(settled(beat.samples, 0.25), kFs, 500.0, 1500.0);
    CHECK((f == doctest::Approx(800.0) || f == doctest::Approx(1200.0)));
    for (double v : demod_dsb(block_of(std::vector<Sample>(4800)), cfg).samples) REQUIRE(v == 0.0);
}

TEST_CASE("SSB sideband selection") {
    const auto cfg = DemodConfig::defaults(DemodMode::SSB_USB);
    const auto audio = ts::real_tone(1000.0, kFs, 48000, 0.8);
    // Analytic signal of 0.8 sin: upper sideband only.
    auto usb = ts::complex_tone(1000.0, kFs, audio.size(), 0.8, -std::numbers::pi / 2);
    const auto up = demod_ssb(block_of(usb), cfg, true);
    const auto down = demod_ssb(block_of(usb), cfg, false);
    CHECK(ts::best_corr(audio, up.samples, 1200, 12000) >= 0.99);
    const double ratio_db = 20 * std::log10(ts::rms(settled(down.samples, 0.25)) / ts::rms(settled(up.samples, 0.25)));
    CHECK(ratio_db <= -30.0);
    for (double v : demod_ssb(block_of(std::vector<Sample>(4800)), cfg, true).samples) REQUIRE(v == 0.0);
}

TEST_CASE("every demodulator is bounded on unit-power noise") {
    const double fs = 240000.0;
    for (auto mode : kAllModes) {
        CAPTURE(to_string(mode));
        Demodulator d(DemodConfig::defaults(mode), fs);
        const auto out = d.process(ts::complex_noise(96000, 3));
        for (double v : out.samples) REQUIRE(std::abs(v) <= Demodulator::kOutputLimit);
        // Large-amplitude input too.
        auto big = ts::complex_noise(48000, 4, 100.0);
        for (double v : d.process(big).samples) REQUIRE(std::abs(v) <= Demodulator::kOutputLimit);
    }
}

TEST_CASE("block split invariance for every mode") {
    const double fs = 96000.0;
    auto x = fm_signal(ts::real_tone(700.0, fs, 30000, 0.5), 2000.0, fs);
    const auto n = ts::complex_noise(x.size(), 8, 0.01);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.5 * x[k] + n[k];
    for (auto mode : kAllModes) {
        CAPTURE(to_string(mode));
        const auto cfg = DemodConfig::defaults(mode);
        Demodulator whole(cfg, fs), split(cfg, fs);
        const auto ref = whole.process(x).samples;
        const std::span<const Sample> all(x);
        auto a = split.process(all.subspan(0, 12345)).samples;
        const auto b = split.process(all.subspan(12345)).samples;
        a.insert(a.end(), b.begin(), b.end());
        REQUIRE(a.size() == ref.size());
        CHECK(ts::rms_diff<double>(a, ref) <= 1e-9);
    }
}

TEST_CASE("NFM keeps the tone at 20 dB channel SNR") {
    const auto cfg = DemodConfig::defaults(DemodMode::NFM);
    const auto audio = ts::real_tone(1000.0, kFs, 48000, 1.0);
    auto z = fm_signal(audio, cfg.deviation_hz, kFs);
    // 20 dB over the Carson bandwidth (2 * (2500 + 5000)), white across the 48 kHz span.
    const double variance = kFs / (15000.0 * 100.0);
    const auto w = ts::complex_noise(z.size(), 77, variance);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += w[k];
    const auto out = demod_fm(block_of(z), cfg);
    CHECK(ts::best_corr(audio, out.samples, 400, 2400) >= 0.9);
}

TEST_CASE("demodulator configuration errors") {
    CHECK_THROWS_AS(Demodulator(DemodConfig::defaults(DemodMode::NFM), 44100.0), ValueError);
    auto bad = DemodConfig::defaults(DemodMode::NFM);
    bad.deviation_hz = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValueError);
    CHECK(clamp_audio_cutoff(116240.0) == kMaxAudioCutoffHz);
    CHECK(clamp_audio_cutoff(8000.0) == 8000.0);

    RunningMeanDcBlocker dc(10);
    for (int i = 0; i < 30; ++i) REQUIRE(dc(3.0) == doctest::Approx(0.0));
}
