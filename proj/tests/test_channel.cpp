#include "doctest.h"
#include "sdrtk/channel.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/iq_io.hpp"
#include "support.hpp"

#include <fstream>

using namespace sdrtk;
namespace ts = testing_support;

namespace {

std::vector<Sample> drain(SceneSource& src) {
    std::vector<Sample> out;
    while (auto b = src.next(65536)) out.insert(out.end(), b->samples.begin(), b->samples.end());
    return out;
}

std::vector<Sample> render(const SceneSpec& spec) {
    SceneSource src(spec);
    return drain(src);
}

StationConfig tone_station(DemodMode mode, double freq, double tone_hz = 1000.0) {
    auto s = StationConfig::defaults(mode);
    s.freq_hz = freq;
    s.audio = ToneAudio{tone_hz, 1.0};
    return s;
}

SceneSpec base_scene(double duration = 0.1) {
    SceneSpec s;
    s.center_hz = 100e6;
    s.sample_rate_hz = 2.4e6;
    s.duration_s = duration;
    s.seed = 11;
    return s;
}

}  // namespace

TEST_CASE("Gaussian RNG moments and determinism") {
    GaussianRng a(5), b(5), c(6);
    double sum = 0, sum2 = 0;
    const int n = 200000;
    bool differs = false;
    for (int i = 0; i < n; ++i) {
        const double x = a.normal();
        REQUIRE(x == b.normal());
        if (x != c.normal()) differs = true;
        sum += x;
        sum2 += x * x;
    }
    CHECK(differs);
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 1) != derive_seed(2, 1));
}

TEST_CASE("three stations appear at their offsets") {
    auto s = base_scene();
    s.stations = {tone_station(DemodMode::NFM, 99.7e6), tone_station(DemodMode::AM, 100e6),
                  tone_station(DemodMode::NFM, 100.3e6)};
    const auto z = render(s);
    REQUIRE(z.size() == 240000);
    const double fs = s.sample_rate_hz;
    auto band_power = [&](double f) {
        double p = 0;
        for (double d = -10000; d <= 10000; d += 500) p += ts::tone_power(z, f + d, fs);
        return p;
    };
    const double quiet = band_power(150000.0);
    for (double f : {-300000.0, 0.0, 300000.0}) {
        CAPTURE(f);
        CHECK(band_power(f) > 1e4 * quiet);
    }
}

TEST_CASE("single FM station passes through at unit power") {
    auto s = base_scene();
    s.stations = {tone_station(DemodMode::NFM, 100.1e6)};
    const auto z = render(s);
    for (const auto& v : z) REQUIRE(std::abs(v) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(station_power(s.stations[0], s.center_hz, s.sample_rate_hz, 1) == doctest::Approx(1.0).epsilon(1e-9));

    s.stations.clear();
    for (const auto& v : render(s)) REQUIRE(v == Sample{});
}

TEST_CASE("power levels add across stations") {
    auto s = base_scene(0.2);
    s.stations = {tone_station(DemodMode::NFM, 99.8e6), tone_station(DemodMode::AM, 100.2e6)};
    s.stations[1].power_db = -6.0;
    const double total = ts::mean_power(render(s));
    double parts = 0;
    for (std::size_t i = 0; i < s.stations.size(); ++i) {
        auto one = s;
        one.stations = {s.stations[i]};
        parts += ts::mean_power(render(one));
    }
    CHECK(total == doctest::Approx(parts).epsilon(0.01));
}

TEST_CASE("AWGN variance formula and near-noiseless case") {
    AwgnParams p{20.0, 2.0, 10000.0, 1e6};
    CHECK(p.noise_variance() == doctest::Approx(2.0 * 1e6 / (10000.0 * 100.0)));

    auto s = base_scene();
    s.stations = {tone_station(DemodMode::NFM, 100.05e6)};
    const auto clean = render(s);
    s.channel.snr_db = 100.0;
    const auto noisy = render(s);
    CHECK(ts::rms_diff<Sample>(clean, noisy) < 1e-3);
}

TEST_CASE("AWGN calibration in the station bandwidth") {
    for (double snr : {0.0, 5.0, 15.0, 25.0, 40.0}) {
        CAPTURE(snr);
        auto s = base_scene(0.5);
        s.stations = {tone_station(DemodMode::NFM, 100.2e6)};
        const auto clean = render(s);
        s.channel.snr_db = snr;
        const auto noisy = render(s);
        REQUIRE(noisy.size() >= 1000000);
        double noise = 0;
        for (std::size_t k = 0; k < noisy.size(); ++k) noise += std::norm(noisy[k] - clean[k]);
        noise /= static_cast<double>(noisy.size());
        const double signal = ts::mean_power(clean);
        const double bw = s.stations[0].nominal_bandwidth_hz();
        const double measured = 10 * std::log10(signal / (noise * bw / s.sample_rate_hz));
        CHECK(measured == doctest::Approx(snr).epsilon(0.5 / std::max(1.0, snr)));
        CHECK(std::abs(measured - snr) <= 0.5);
    }
}

TEST_CASE("scene rendering is deterministic per seed") {
    auto s = base_scene();
    s.stations = {tone_station(DemodMode::NFM, 100.1e6)};
    s.stations[0].audio = NoiseAudio{3000.0};
    s.channel.snr_db = 10.0;
    const auto a = render(s);
    const auto b = render(s);
    CHECK(ts::rms_diff<Sample>(a, b) == 0.0);
    s.seed = 12;
    CHECK(ts::rms_diff<Sample>(a, render(s)) > 0.1);
}

TEST_CASE("front end gain and frequency offset") {
    auto s = base_scene();
    auto st = StationConfig::defaults(DemodMode::AM);
    st.freq_hz = 100e6;
    st.audio = ToneAudio{1000.0, 0.0};
    s.stations = {st};
    const auto flat = render(s);
    s.channel.gain_db = 19.0;
    const auto gained = render(s);
    CHECK(ts::mean_power(gained) / ts::mean_power(flat) == doctest::Approx(std::pow(10.0, 1.9)).epsilon(1e-6));
    CHECK(std::sqrt(ts::mean_power(gained) / ts::mean_power(flat)) == doctest::Approx(8.913).epsilon(1e-3));

    s.channel.gain_db = 0.0;
    s.channel.freq_offset_hz = 1000.0;
    const auto shifted = render(s);
    const double fs = s.sample_rate_hz;
    CHECK(ts::tone_power(shifted, 1000.0, fs) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ts::tone_power(shifted, 0.0, fs) < 1e-6);
}

TEST_CASE("hardware noise floor") {
    FrontEndParams p;
    p.hardware_noise = true;
    FrontEnd fe(p, 2.4e6, 3);
    const double expected = std::pow(10.0, (-174.0 + p.noise_figure_db + 10 * std::log10(2.4e6) - p.full_scale_dbm) / 10);
    CHECK(fe.noise_floor_variance() == doctest::Approx(expected));
    IqBlock b;
    b.samples.assign(400000, Sample{});
    b.sample_rate_hz = 2.4e6;
    fe.apply(b);
    CHECK(ts::mean_power(b.samples) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("audio generators") {
    AudioGenerator tone(ToneAudio{1000.0, 0.5}, 1);
    const auto a = tone.next(4800);
    const auto b = tone.next(4800);
    const auto ref = ts::real_tone(1000.0, kAudioRateHz, 9600, 0.5);
    for (std::size_t k = 0; k < 4800; ++k) {
        REQUIRE(a[k] == doctest::Approx(ref[k]).epsilon(1e-9));
        REQUIRE(b[k] == doctest::Approx(ref[4800 + k]).epsilon(1e-9));
    }

    AudioGenerator noise(NoiseAudio{3000.0}, 2);
    const auto n = noise.next(96000);
    for (double v : n) REQUIRE(std::abs(v) <= 1.0);
    CHECK(ts::rms(std::span<const double>(n).subspan(4800)) == doctest::Approx(1.0 / 3.0).epsilon(0.1));

    ts::TempDir dir;
    const auto wav = dir / "clip.wav";
    write_wav(AudioBlock{ts::real_tone(440.0, kAudioRateHz, 480, 0.5), kAudioRateHz}, wav);
    AudioGenerator file(FileAudio{wav}, 0);
    const auto looped = file.next(1440);
    for (std::size_t k = 0; k < 480; ++k) REQUIRE(looped[k + 960] == doctest::Approx(looped[k]).epsilon(1e-9));
    CHECK_THROWS_AS(AudioGenerator(FileAudio{dir / "nope.wav"}, 0), IoError);
}

TEST_CASE("scene JSON parsing") {
    const std::string text = R"({
        "center_hz": 145000000, "sample_rate_hz": 1200000, "duration_s": 0.5, "seed": 9,
        "stations": [
            {"freq_hz": 145100000, "mode": "NFM", "deviation_hz": 3000, "audio": {"tone": 700}},
            {"freq_hz": 144900000, "mode": "AM", "depth": 0.8, "audio": {"noise": {"bandwidth_hz": 2500}},
             "power_db": -10}
        ],
        "channel": {"snr_db": 20, "reference": 1, "gain_db": 3, "freq_offset_hz": -50}
    })";
    const auto s = parse_scene_json(text);
    CHECK(s.center_hz == 145e6);
    CHECK(s.sample_rate_hz == 1.2e6);
    CHECK(s.seed == 9);
    REQUIRE(s.stations.size() == 2);
    CHECK(s.stations[0].deviation_hz == 3000.0);
    CHECK(std::get<ToneAudio>(s.stations[0].audio).freq_hz == 700.0);
    CHECK(s.stations[1].am_depth == 0.8);
    CHECK(std::get<NoiseAudio>(s.stations[1].audio).bandwidth_hz == 2500.0);
    CHECK(s.stations[1].power_db == -10.0);
    CHECK(*s.channel.snr_db == 20.0);
    CHECK(s.channel.reference == 1);
    CHECK(s.channel.freq_offset_hz == -50.0);

    const auto again = parse_scene_json(scene_to_json(s));
    CHECK(scene_to_json(again) == scene_to_json(s));

    CHECK_THROWS_AS(parse_scene_json("{not json"), FormatError);
    CHECK_THROWS_AS(parse_scene_json(R"({"stations": []})"), ConfigError);
    CHECK_THROWS_AS(parse_scene_json(R"({"center_hz": 1e8, "stations": [{"mode": "AM"}]})"), ConfigError);
    CHECK_THROWS_AS(parse_scene_json(R"({"center_hz": 1e8, "stations": [{"freq_hz": 1e8, "mode": "XYZ"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_scene_json(R"({"center_hz": "high"})"), ConfigError);

    CHECK_THROWS_AS(parse_scene_json(R"({"center_hz": 1e8, "stations": [{"freq_hz": 1.02e8}]})"), ValueError);
    CHECK_THROWS_AS(parse_scene_json(R"({"center_hz": 1e8, "stations": [{"freq_hz": 1e8}],
                                         "channel": {"snr_db": 10, "reference": 3}})"),
                    ValueError);
    auto outside = base_scene();
    outside.stations = {tone_station(DemodMode::AM, 101.3e6)};
    CHECK_THROWS_AS(SceneSource{outside}, ValueError);

    ts::TempDir dir;
    CHECK_THROWS_AS(load_scene(dir / "missing.json"), IoError);
    {
        std::ofstream f(dir / "scene.json");
        f << text;
    }
    CHECK(load_scene(dir / "scene.json").stations.size() == 2);
}
