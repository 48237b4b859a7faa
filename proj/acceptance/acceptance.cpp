// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "sdrtk/channel.hpp"
#include "sdrtk/demod.hpp"
#include "sdrtk/dsp.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/iq_io.hpp"
#include "sdrtk/metrics.hpp"
#include "sdrtk/modulate.hpp"
#include "sdrtk/protocol.hpp"
#include "sdrtk/quality.hpp"
#include "sdrtk/receiver.hpp"
#include "sdrtk/service.hpp"
#include "sdrtk/session.hpp"
#include "support.hpp"
#include "ws_client.hpp"

using namespace sdrtk;
namespace ts = testing_support;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

// Tolerances and runtime limits.
constexpr double kCodecLimitS = 1.0;
constexpr double kWindowsLimitS = 5.0;
constexpr double kBlackmanEndpointTol = 1e-12;
constexpr double kBh4Endpoint = 6.0e-5;
constexpr double kBh4EndpointTol = 1e-9;
constexpr double kBlackmanSidelobeDb = -57.0;
constexpr double kBh4SidelobeDb = -90.0;
constexpr double kBh7SidelobeDb = -150.0;
constexpr double kLoopbackLimitS = 30.0;
constexpr double kLoopbackCorr = 0.99;
constexpr double kLoopbackNoisyCorr = 0.9;
constexpr double kLoopbackNoisySnrDb = 20.0;
constexpr double kGpioLimitS = 10.0;
constexpr double kGpioCorr = 0.95;
constexpr double kGpioHarmonicTolDb = 1.0;
constexpr double kSnrLimitS = 20.0;
constexpr double kSnrTolDb = 1.5;
constexpr double kTableLimitS = 120.0;
constexpr std::size_t kTableMinCells = 44;
constexpr double kThroughputSps = 2.4e6;
constexpr double kBridgeCorr = 0.98;
constexpr int kRetuneFrames = 2;
constexpr int kFuzzMessages = 10000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 3) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(prec) << v;
    return o.str();
}

int g_failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && dt >= limit_s) {
        r.pass = false;
        r.detail += "; runtime over limit";
    }
    if (!r.pass) ++g_failures;
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << name << ": " << r.detail << " [" << fmt(dt, 2) << " s"
              << (limit_s > 0 ? " < " + fmt(limit_s, 0) + " s" : "") << "]" << std::endl;
}

// --- codec ------------------------------------------------------------------------------------

Outcome codec() {
    std::vector<std::uint8_t> all(512);
    for (int b = 0; b < 256; ++b) all[2 * b] = all[2 * b + 1] = static_cast<std::uint8_t>(b);
    const auto again = encode_rtl_bytes(decode_rtl_bytes(all));
    int identity = 0;
    for (int b = 0; b < 256; ++b) {
        const double expect = (b - 127.5) / 127.5;
        const auto z = decode_rtl_bytes(std::span<const std::uint8_t>(all).subspan(2 * b, 2))[0];
        if (again[2 * b] == b && again[2 * b + 1] == b && z.real() == expect) ++identity;
    }

    ts::TempDir dir;
    std::mt19937_64 rng(1);
    std::vector<std::uint8_t> raw(1 << 20);
    for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
    std::ofstream(dir / "in.raw", std::ios::binary).write(reinterpret_cast<const char*>(raw.data()), raw.size());
    CaptureMeta meta;
    meta.sample_rate_hz = 2.4e6;
    meta.center_hz = 100e6;
    write_capture_meta(meta, dir / "in.raw.json");
    const auto blocks = read_capture(dir / "in.raw", dir / "in.raw.json");
    write_capture(blocks, dir / "out.raw", dir / "out.raw.json", meta);
    std::ifstream f(dir / "out.raw", std::ios::binary);
    const std::vector<std::uint8_t> back((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const bool same = back == raw;
    return {identity == 256 && same,
            std::to_string(identity) + "/256 byte values identical; 1 MiB capture round trip " +
                (same ? "byte-identical" : "differs")};
}

// --- windows ----------------------------------------------------------------------------------

// Peak sidelobe of a window from a dense DTFT, walking out of the main lobe to its first null.
double peak_sidelobe_db(const std::vector<double>& w) {
    const std::size_t n = w.size();
    const int oversample = 64;
    const std::size_t grid = n * oversample / 2;
    std::vector<double> mag(grid);
    for (std::size_t i = 0; i < grid; ++i) {
        mag[i] = ts::dtft_mag(w, static_cast<double>(i) / (2.0 * static_cast<double>(grid)));
    }
    std::size_t i = 1;
    while (i < grid && mag[i] <= mag[i - 1]) ++i;
    const double side = *std::max_element(mag.begin() + static_cast<std::ptrdiff_t>(i), mag.end());
    return 20 * std::log10(side / mag[0]);
}

Outcome windows() {
    bool ok = true;
    std::ostringstream d;
    for (auto kind : {WindowKind::Blackman, WindowKind::BlackmanHarris4, WindowKind::BlackmanHarris7}) {
        const auto w = window(kind, 129);
        bool sym = true;
        for (std::size_t k = 0; k < w.size(); ++k) sym = sym && std::abs(w[k] - w[w.size() - 1 - k]) <= 1e-15;
        const double center = w[64];
        const double side = peak_sidelobe_db(window(kind, 101));
        double limit = kBlackmanSidelobeDb;
        bool end_ok = true;
        if (kind == WindowKind::Blackman) {
            end_ok = std::abs(w.front()) <= kBlackmanEndpointTol;
        } else if (kind == WindowKind::BlackmanHarris4) {
            limit = kBh4SidelobeDb;
            end_ok = std::abs(w.front() - kBh4Endpoint) <= kBh4EndpointTol;
        } else {
            limit = kBh7SidelobeDb;
        }
        const bool center_ok = kind == WindowKind::BlackmanHarris7 || std::abs(center - 1.0) <= 1e-12;
        ok = ok && sym && end_ok && center_ok && side <= limit;
        d << to_string(kind) << " sym=" << sym << " center=" << fmt(center, 6) << " end=" << w.front()
          << " sidelobe=" << fmt(side, 1) << "dB (<= " << limit << "); ";
    }
    return {ok, d.str()};
}

// --- loopback ---------------------------------------------------------------------------------

double loop_once(DemodMode mode, std::optional<double> snr_db, std::uint64_t seed) {
    const double fs = 240000.0;
    // Three tones inside every mode's audio band; period 480 samples at 48 kHz.
    std::vector<double> audio(24000, 0.0);
    for (double f : {400.0, 1000.0, 2700.0}) {
        const auto t = ts::real_tone(f, kAudioRateHz, audio.size(), 0.3);
        for (std::size_t k = 0; k < audio.size(); ++k) audio[k] += t[k];
    }
    auto tx = TxConfig::defaults(mode, fs);
    auto iq = Modulator(tx).process(audio);
    if (snr_db) {
        // Independent AWGN: noise power set from the measured signal power in the nominal bandwidth.
        const double p = ts::mean_power(iq);
        const double variance = p * fs / (nominal_bandwidth_hz(tx) * std::pow(10.0, *snr_db / 10.0));
        const auto w = ts::complex_noise(iq.size(), seed, variance);
        for (std::size_t k = 0; k < iq.size(); ++k) iq[k] += w[k];
    }
    IqBlock b;
    b.samples = std::move(iq);
    b.sample_rate_hz = fs;
    b.center_hz = 100e6;
    TuningParams p;
    p.center_hz = 100e6;
    p.mode = mode;
    p.baseband_hz = DemodConfig::defaults(mode).audio_cutoff_hz;
    p.deviation_hz = tx.deviation_hz;
    RxChain rx(p, fs, 100e6);
    const auto out = rx.process(b).audio.samples;
    return ts::best_corr(audio, out, 479, 4800);
}

Outcome loopback() {
    bool ok = true;
    std::ostringstream d;
    for (auto mode : kAllModes) {
        const double c = loop_once(mode, std::nullopt, 1);
        ok = ok && c >= kLoopbackCorr;
        d << to_string(mode) << "=" << fmt(c, 4) << " ";
    }
    const double noisy = loop_once(DemodMode::NFM, kLoopbackNoisySnrDb, 20);
    ok = ok && noisy >= kLoopbackNoisyCorr;
    d << "(>= " << kLoopbackCorr << "); NFM@20dB=" << fmt(noisy,4) << " (>= " << kLoopbackNoisyCorr << ")";
    return {ok, d.str()};
}

// --- GPIO ------------------------------------------------------------------------------------

Outcome gpio() {
    const double fs = 2.4e6;
    TxConfig cfg = TxConfig::defaults(DemodMode::NFM, fs);
    cfg.carrier_hz = 100000.0;
    cfg.deviation_hz = 5000.0;
    const auto audio = ts::real_tone(1000.0, kAudioRateHz, 24000, 1.0);
    const auto pin = gpio_fm_waveform(audio, cfg);

    const auto idle = gpio_fm_waveform(std::vector<double>(4800, 0.0), cfg);
    std::vector<Sample> z(idle.begin(), idle.end());
    const double ratio_db =
        10 * std::log10(ts::tone_power(z, 100000.0, fs) / ts::tone_power(z, 300000.0, fs));
    const double predicted = 20 * std::log10(3.0);

    IqBlock b;
    b.samples.assign(pin.begin(), pin.end());
    b.sample_rate_hz = fs;
    TuningParams p;
    p.center_hz = 0.0;
    p.offset_hz = cfg.carrier_hz;
    p.deviation_hz = cfg.deviation_hz;
    p.baseband_hz = 5000.0;
    RxChain rx(p, fs, 0.0);
    const double corr = ts::best_corr(audio, rx.process(b).audio.samples, 400, 4800);
    const bool ok = corr >= kGpioCorr && std::abs(ratio_db - predicted) <= kGpioHarmonicTolDb;
    return {ok, "band-passed corr=" + fmt(corr, 4) + " (>= " + fmt(kGpioCorr, 2) + "); fundamental/3rd=" +
                    fmt(ratio_db, 2) + " dB vs " + fmt(predicted, 2) + " +/- " + fmt(kGpioHarmonicTolDb, 1)};
}

// --- SNR estimator ----------------------------------------------------------------------------

Outcome snr_estimator() {
    bool ok = true;
    std::ostringstream d;
    for (double snr : {0.0, 5.0, 15.0, 25.0, 40.0}) {
        SceneSpec s;
        s.center_hz = 100e6;
        s.sample_rate_hz = 240000.0;
        s.duration_s = 2.0;
        s.seed = 100 + static_cast<std::uint64_t>(snr);
        auto st = StationConfig::defaults(DemodMode::NFM);
        st.freq_hz = 100.03e6;
        st.audio = ToneAudio{1000.0, 1.0};
        s.stations = {st};
        s.channel.snr_db = snr;
        SceneSource src(s);
        IqBlock all;
        all.sample_rate_hz = s.sample_rate_hz;
        all.center_hz = s.center_hz;
        while (auto b = src.next(65536)) all.samples.insert(all.samples.end(), b->samples.begin(), b->samples.end());
        const double est = estimate_snr(all, st.freq_hz, st.nominal_bandwidth_hz());
        ok = ok && std::abs(est - snr) <= kSnrTolDb;
        d << fmt(snr, 0) << "->" << fmt(est, 2) << " ";
    }
    d << "(tol " << kSnrTolDb << " dB)";
    return {ok, d.str()};
}

// --- Table 1 ----------------------------------------------------------------------------------

Quality band_of(double injected) { return classify_quality(injected); }

Outcome table1(const std::string& csv_path) {
    const auto grid = reference_quality_grid();
    const auto reports = quality_matrix(QualitySceneTemplate{}, grid, {25.0, 15.0, 5.0});
    std::ofstream csv(csv_path);
    write_quality_csv(csv, reports);
    std::size_t match = 0;
    for (const auto& r : reports) match += r.quality == band_of(r.injected_snr_db);
    const bool ok = reports.size() == 48 && match >= kTableMinCells;
    return {ok, std::to_string(match) + "/" + std::to_string(reports.size()) + " cells in the injected band (>= " +
                    std::to_string(kTableMinCells) + "); CSV " + csv_path};
}

// --- throughput -------------------------------------------------------------------------------

Outcome throughput() {
    const std::string cmd = std::string(SDRTK_CLI_PATH) + " rx --benchmark --benchmark-seconds 3 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return {false, "cannot run CLI"};
    std::string out;
    std::array<char, 4096> buf{};
    while (const auto n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int status = pclose(p);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "benchmark failed: " + out};
    const auto j = json::parse(out.substr(out.find('{')));
    const double sps = j.at("samples_per_s").get<double>();
    const bool ok = sps >= kThroughputSps && j.at("taps") == 1001 && j.at("mode") == "NFM";
    return {ok, fmt(sps / 1e6, 2) + " MS/s with " + std::to_string(j.at("taps").get<int>()) + " taps, D=" +
                    std::to_string(j.at("decimation").get<int>()) + " (>= 2.4 MS/s)"};
}

// --- bridge and retune ------------------------------------------------------------------------

Outcome bridge_and_retune() {
    const double fs = 240000.0, center = 100e6, f1 = 30000.0, f2 = -60000.0;
    auto st = StationConfig::defaults(DemodMode::NFM);
    st.freq_hz = center + f1;
    st.audio = ToneAudio{1000.0, 1.0};
    IqBlock in;
    in.sample_rate_hz = fs;
    in.center_hz = center;
    for (const auto& b : compose_scene({st}, center, fs, 0.5, 5)) {
        in.samples.insert(in.samples.end(), b.samples.begin(), b.samples.end());
    }
    TuningParams rx;
    rx.center_hz = center;
    rx.offset_hz = f1;
    auto tx = TxConfig::defaults(DemodMode::NFM, fs);
    tx.carrier_hz = f2;
    tx.deviation_hz = 5000.0;
    Bridge bridge(rx, tx, fs, center);
    const auto relayed = bridge.process(in);
    TuningParams chk = rx;
    chk.offset_hz = f2;
    chk.deviation_hz = 5000.0;
    RxChain check(chk, fs, center);
    const auto audio = check.process(relayed).audio.samples;
    const double corr = ts::best_corr(ts::real_tone(1000.0, kAudioRateHz, audio.size()), audio, 400, 4800);

    // Two carriers; after a retune the newly tuned one must sit at the frame center.
    SessionOptions opt;
    opt.block_size = 8192;
    opt.spectrum_fft = 2048;
    Session s(opt);
    auto a = StationConfig::defaults(DemodMode::AM);
    a.freq_hz = center - 60000.0;
    a.audio = ToneAudio{1000.0, 0.0};
    auto b = a;
    b.freq_hz = center + 45000.0;
    b.power_db = -3.0;
    std::vector<Sample> scene;
    for (const auto& blk : compose_scene({a, b}, center, fs, 0.5, 6)) {
        scene.insert(scene.end(), blk.samples.begin(), blk.samples.end());
    }
    TuningParams p;
    p.center_hz = center;
    p.offset_hz = -60000.0;
    p.mode = DemodMode::AM;
    s.configure(p, std::make_unique<MemorySource>(std::move(scene), fs, center));
    s.start_rx();
    auto at_center = [](const RxStep& step) {
        const auto& f = *step.output.spectrum;
        auto sorted = f.bins;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        return f.bins[f.fft_size / 2] >= sorted[sorted.size() / 2] + 40.0;
    };
    for (int i = 0; i < 3; ++i) s.step_rx();
    s.retune({.offset_hz = 45000.0});
    int frames = 0;
    while (frames < 10) {
        ++frames;
        if (at_center(s.step_rx())) break;
    }
    const bool ok = corr >= kBridgeCorr && frames <= kRetuneFrames;
    return {ok, "relay corr=" + fmt(corr, 4) + " (>= " + fmt(kBridgeCorr, 2) + "); retune settled in " +
                    std::to_string(frames) + " frame(s) (<= " + std::to_string(kRetuneFrames) + ")"};
}

// --- state machine and fuzz ------------------------------------------------------------------

std::optional<SessionState> declared(SessionState s, SessionEvent e) {
    using S = SessionState;
    using E = SessionEvent;
    static const std::map<std::pair<S, E>, S> table = {
        {{S::Idle, E::Configure}, S::Configured},
        {{S::Configured, E::Configure}, S::Configured},
        {{S::Configured, E::StartRx}, S::Receiving},
        {{S::Configured, E::StartTx}, S::Transmitting},
        {{S::Receiving, E::StartTx}, S::ReceivingAndTransmitting},
        {{S::Receiving, E::StopRx}, S::Configured},
        {{S::Receiving, E::StopAll}, S::Configured},
        {{S::Receiving, E::Retune}, S::Receiving},
        {{S::Transmitting, E::StartRx}, S::ReceivingAndTransmitting},
        {{S::Transmitting, E::StopTx}, S::Configured},
        {{S::Transmitting, E::StopAll}, S::Configured},
        {{S::ReceivingAndTransmitting, E::StopRx}, S::Transmitting},
        {{S::ReceivingAndTransmitting, E::StopTx}, S::Receiving},
        {{S::ReceivingAndTransmitting, E::StopAll}, S::Configured},
        {{S::ReceivingAndTransmitting, E::Retune}, S::ReceivingAndTransmitting},
    };
    const auto it = table.find({s, e});
    if (it == table.end()) return std::nullopt;
    return it->second;
}

std::unique_ptr<BlockSource> quiet_source() {
    return std::make_unique<MemorySource>(std::vector<Sample>(8192), 240000.0, 100e6);
}

TuningParams quiet_tuning() {
    TuningParams p;
    p.center_hz = 100e6;
    p.offset_hz = 20000.0;
    return p;
}

// Applies an event to a live session; false when the session refuses it.
bool fire(Session& s, SessionEvent e) {
    try {
        switch (e) {
            case SessionEvent::Configure: s.configure(quiet_tuning(), quiet_source()); break;
            case SessionEvent::StartRx: s.start_rx(); break;
            case SessionEvent::StartTx: s.start_tx(TxConfig::defaults(DemodMode::NFM, 240000.0)); break;
            case SessionEvent::StopRx: s.stop(StopWhich::Rx); break;
            case SessionEvent::StopTx: s.stop(StopWhich::Tx); break;
            case SessionEvent::StopAll: s.stop(StopWhich::All); break;
            case SessionEvent::Retune: s.retune({.offset_hz = 30000.0}); break;
        }
        return true;
    } catch (const StateError&) {
        return false;
    }
}

Outcome state_machine() {
    int agree = 0, total = 0;
    for (auto s : kAllStates) {
        for (auto e : kAllEvents) {
            ++total;
            Session live;
            if (s != SessionState::Idle) live.configure(quiet_tuning(), quiet_source());
            if (rx_running(s)) live.start_rx();
            if (tx_running(s)) live.start_tx(TxConfig::defaults(DemodMode::NFM, 240000.0));
            const auto want = declared(s, e);
            const bool accepted = fire(live, e);
            const bool live_ok = want ? accepted && live.state() == *want : !accepted && live.state() == s;
            agree += transition(s, e) == want && live_ok;
        }
    }

    ts::TempDir dir;
    SceneSpec scene;
    scene.center_hz = 100e6;
    scene.sample_rate_hz = 240000.0;
    auto st = StationConfig::defaults(DemodMode::NFM);
    st.freq_hz = 100.05e6;
    scene.stations = {st};
    std::ofstream(dir / "scene.json") << scene_to_json(scene);
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.block_size = 4096;
    cfg.realtime = false;
    cfg.default_source = SceneFileSpec{dir / "scene.json"};
    Service service(cfg);
    service.start();
    bool alive = false;
    std::uint64_t handled = 0;
    {
        ts::WsClient client("127.0.0.1", service.port());
        const std::vector<std::string> seeds = {
            R"({"type":"configure","center_hz":100000000,"offset_hz":50000})",
            R"({"type":"start_rx"})",
            R"({"type":"tune","offset_hz":20000})",
            R"({"type":"tune","offset_hz":900000})",
            R"({"type":"set_mode","mode":"WFM"})",
            R"({"type":"set_gain","gain_db":-3})",
            R"({"type":"start_tx","tx":{"carrier_hz":-70000}})",
            R"({"type":"stop","which":"tx"})",
            R"({"type":"stop","which":"all"})",
        };
        std::mt19937_64 rng(99);
        for (int i = 0; i < kFuzzMessages; ++i) {
            const auto kind = rng() % 8;
            if (kind == 0) {
                std::vector<std::uint8_t> junk(rng() % 48);
                for (auto& x : junk) x = static_cast<std::uint8_t>(rng());
                client.send_binary(junk);
            } else if (kind < 3) {
                std::string s(rng() % 96, ' ');
                for (auto& c : s) c = static_cast<char>(32 + rng() % 95);
                client.send_text(s);
            } else {
                std::string s = seeds[rng() % seeds.size()];
                if (kind < 6) {
                    for (int k = 0; k < 3 && !s.empty(); ++k) s[rng() % s.size()] = static_cast<char>(32 + rng() % 95);
                }
                client.send_text(s);
            }
        }
        const auto deadline = std::chrono::steady_clock::now() + 60s;
        while (service.stats().messages < static_cast<std::uint64_t>(kFuzzMessages) &&
               std::chrono::steady_clock::now() < deadline) {
            std::this_thread::sleep_for(10ms);
        }
        handled = service.stats().messages;
        ts::WsClient probe("127.0.0.1", service.port());
        alive = !client.closed() &&
                probe.wait_for([](const ts::WsClient::Frame& f) { return f.text; }, 1000ms).has_value();
    }
    service.stop();
    const bool ok = agree == total && handled == static_cast<std::uint64_t>(kFuzzMessages) && alive;
    return {ok, std::to_string(agree) + "/" + std::to_string(total) + " (state,event) pairs match; " +
                    std::to_string(handled) + "/" + std::to_string(kFuzzMessages) +
                    " fuzzed messages handled; service " + (alive ? "responsive" : "unresponsive")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string csv = argc > 1 ? argv[1] : "quality_matrix.csv";
    criterion("byte codec", kCodecLimitS, codec);
    criterion("windows", kWindowsLimitS, windows);
    criterion("loopback matrix", kLoopbackLimitS, loopback);
    criterion("GPIO transmitter", kGpioLimitS, gpio);
    criterion("SNR estimator", kSnrLimitS, snr_estimator);
    criterion("quality matrix (4 rows x 4 modes x 3 SNRs)", kTableLimitS, [&] { return table1(csv); });
    criterion("throughput (CLI benchmark)", 0, throughput);
    criterion("bridge and retune", 0, bridge_and_retune);
    criterion("state machine and protocol fuzz", 0, state_machine);
    std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED") << std::endl;
    return g_failures;
}
