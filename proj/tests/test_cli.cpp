#include "doctest.h"
#include "json.hpp"
#include "sdrtk/iq_io.hpp"
#include "support.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace sdrtk;
namespace ts = testing_support;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(SDRTK_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    while (const auto n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<json> json_lines(const std::string& out) {
    std::vector<json> v;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) v.push_back(json::parse(line));
    }
    return v;
}

void write_scene(const std::filesystem::path& path, double snr_db) {
    json scene = {{"center_hz", 100e6},
                  {"sample_rate_hz", 2.4e6},
                  {"duration_s", 1.0},
                  {"seed", 4},
                  {"stations", {{{"freq_hz", 100.1e6}, {"mode", "NFM"}, {"audio", {{"tone", 1000}}}, {"power_db", -20}}}},
                  {"channel", {{"snr_db", snr_db}, {"reference", 0}}}};
    std::ofstream(path) << scene.dump();
}

// Residual after removing the best-fit 1 kHz sinusoid and DC, relative to the sinusoid.
double thd_n_db(std::span<const double> a, double fs, double f) {
    const std::size_t n = a.size() - a.size() % static_cast<std::size_t>(fs / f);
    double mean = 0, c = 0, s = 0;
    for (std::size_t k = 0; k < n; ++k) mean += a[k];
    mean /= static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2 * std::numbers::pi * f * static_cast<double>(k) / fs;
        c += (a[k] - mean) * std::cos(w);
        s += (a[k] - mean) * std::sin(w);
    }
    c *= 2.0 / static_cast<double>(n);
    s *= 2.0 / static_cast<double>(n);
    double resid = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2 * std::numbers::pi * f * static_cast<double>(k) / fs;
        const double e = a[k] - mean - c * std::cos(w) - s * std::sin(w);
        resid += e * e;
    }
    resid /= static_cast<double>(n);
    return 10 * std::log10(resid / ((c * c + s * s) / 2));
}

}  // namespace

TEST_CASE("exit codes") {
    ts::TempDir dir;
    CHECK(run("--bogus").code == 2);
    CHECK(run("rx --in x.raw --out y.wav --mode QAM").code == 2);
    CHECK(run("rx --help").code == 0);
    CHECK(run("rx --in " + (dir / "none.raw").string() + " --out " + (dir / "a.wav").string()).code == 3);

    write_scene(dir / "s.json", 25.0);
    REQUIRE(run("synth --scene " + (dir / "s.json").string() + " --out " + (dir / "c.raw").string() +
                " --duration 0.1")
                .code == 0);
    CHECK(run("rx --in " + (dir / "c.raw").string() + " --out " + (dir / "a.wav").string() + " --offset-hz 1300000")
              .code == 4);
    std::ofstream(dir / "bad.json") << "{\"center_hz\":";
    CHECK(run("synth --scene " + (dir / "bad.json").string() + " --out " + (dir / "d.raw").string()).code == 3);
}

TEST_CASE("synth then rx recovers the tone and reports Strong at 25 dB") {
    ts::TempDir dir;
    write_scene(dir / "s.json", 25.0);
    const auto raw = (dir / "c.raw").string(), wav = (dir / "a.wav").string();
    REQUIRE(run("synth --scene " + (dir / "s.json").string() + " --out " + raw).code == 0);
    const auto r = run("rx --in " + raw + " --out " + wav + " --offset-hz 100000 --mode NFM");
    REQUIRE(r.code == 0);
    const auto j = json_lines(r.out).back();
    CHECK(j["quality"] == "Strong");
    CHECK(j["snr_db"].get<double>() == doctest::Approx(25.0).epsilon(0.04));
    const auto audio = read_wav(wav);
    CHECK(audio.rate_hz == kAudioRateHz);
    CHECK(audio.samples.size() == 48000);
    CHECK(ts::best_corr(ts::real_tone(1000.0, kAudioRateHz, audio.samples.size()), audio.samples, 48, 4800) >= 0.95);
}

TEST_CASE("rx audio distortion at high SNR") {
    ts::TempDir dir;
    write_scene(dir / "s.json", 100.0);
    const auto raw = (dir / "c.raw").string(), wav = (dir / "a.wav").string();
    REQUIRE(run("synth --scene " + (dir / "s.json").string() + " --out " + raw).code == 0);
    REQUIRE(run("rx --in " + raw + " --out " + wav + " --offset-hz 100000 --mode NFM").code == 0);
    const auto audio = read_wav(wav);
    const auto settled = std::span<const double>(audio.samples).subspan(4800);
    CHECK(thd_n_db(settled, kAudioRateHz, 1000.0) <= -40.0);
}

TEST_CASE("loopback prints one row per mode") {
    const auto r = run("loopback --duration 0.3");
    REQUIRE(r.code == 0);
    const auto rows = json_lines(r.out);
    REQUIRE(rows.size() == 6);
    for (const auto& row : rows) {
        CAPTURE(row.dump());
        CHECK(row["correlation"].get<double>() >= 0.95);
    }
}

TEST_CASE("transmit then receive through files") {
    ts::TempDir dir;
    const auto tone = ts::real_tone(700.0, kAudioRateHz, 24000, 0.8);
    write_wav(AudioBlock{tone, kAudioRateHz}, dir / "in.wav");
    const auto raw = (dir / "tx.raw").string();
    REQUIRE(run("tx --in " + (dir / "in.wav").string() + " --out " + raw +
                " --mode AM --sample-rate 240000 --center-hz 100000000")
                .code == 0);
    REQUIRE(run("rx --in " + raw + " --out " + (dir / "out.wav").string() + " --mode AM").code == 0);
    const auto audio = read_wav(dir / "out.wav");
    CHECK(ts::best_corr(tone, audio.samples, 400, 12000) >= 0.95);
}
