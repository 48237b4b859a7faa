// sdrtk: batch entry points for the SDR transceiver toolkit.
//
// Machine-readable results go to stdout as JSON lines; diagnostics go to stderr.
// Exit codes: 0 ok, 2 bad flags, 3 format/config/I-O failure, 4 DSP precondition failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdrtk/channel.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/iq_io.hpp"
#include "sdrtk/loopback.hpp"
#include "sdrtk/metrics.hpp"
#include "sdrtk/modulate.hpp"
#include "sdrtk/quality.hpp"
#include "sdrtk/receiver.hpp"
#include "sdrtk/service.hpp"
#include "sdrtk/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdrtk;

namespace {

constexpr int kExitFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitDsp = 4;

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

void emit(const json& j) { std::cout << j.dump() << std::endl; }

// Fixed gain that keeps a streamed modulator inside the u8 full scale for demodulator audio (|a| <= 1.5).
double stream_headroom(const TxConfig& c) {
    switch (c.mode) {
        case DemodMode::AM: return 1.0 / (1.0 + 1.5 * c.am_depth);
        case DemodMode::DSB:
        case DemodMode::SSB_USB:
        case DemodMode::SSB_LSB: return 1.0 / 1.5;
        default: return 1.0;
    }
}

// Scales a whole buffer so neither component exceeds full scale.
void fit_full_scale(std::vector<Sample>& iq) {
    double peak = 0.0;
    for (const auto& z : iq) peak = std::max({peak, std::abs(z.real()), std::abs(z.imag())});
    if (peak <= 1.0) return;
    for (auto& z : iq) z /= peak;
}

// Checked string -> enum validators for CLI11.
const CLI::Validator kModeCheck(
    [](std::string& s) {
        try {
            parse_mode(s);
            return std::string();
        } catch (const Error& e) {
            return std::string(e.what());
        }
    },
    "MODE", "mode");

const CLI::Validator kWindowCheck(
    [](std::string& s) {
        try {
            parse_window(s);
            return std::string();
        } catch (const Error& e) {
            return std::string(e.what());
        }
    },
    "WINDOW", "window");

fs::path default_meta(const fs::path& raw) { return fs::path(raw.string() + ".json"); }

// --- shared tuning flags ---------------------------------------------------------------------

struct TuneFlags {
    double offset_hz = 0.0;
    std::string mode = "NFM";
    std::optional<double> baseband_hz;
    std::string window = "BlackmanHarris4";
    std::size_t order = 1000;
    double step_khz = 0.001;
    double gain_db = 0.0;
    std::optional<double> deviation_hz;

    void add(CLI::App* app, const std::string& prefix = "") {
        app->add_option("--" + prefix + "offset-hz", offset_hz, "Tuning offset from the capture center (Hz)")
            ->capture_default_str();
        app->add_option("--" + prefix + "mode", mode, "Demodulation mode: AM, DSB, USB, LSB, NFM, WFM")
            ->check(kModeCheck)
            ->capture_default_str();
        app->add_option("--" + prefix + "baseband-hz", baseband_hz,
                        "Audio cutoff (Hz); default 5000, or 15000 for WFM");
        app->add_option("--" + prefix + "window", window, "Channel filter window: Blackman, BH4, BH7")
            ->check(kWindowCheck)
            ->capture_default_str();
        app->add_option("--" + prefix + "order", order, "Channel filter order (taps = order + 1)")
            ->check(CLI::Range(std::size_t{2}, std::size_t{100000}))
            ->capture_default_str();
        app->add_option("--" + prefix + "step-khz", step_khz, "Tuning step; the offset snaps to it (kHz)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_option("--" + prefix + "gain-db", gain_db, "Digital gain applied before the chain (dB)")
            ->capture_default_str();
        app->add_option("--" + prefix + "deviation-hz", deviation_hz, "FM deviation override (Hz)")
            ->check(CLI::PositiveNumber);
    }

    TuningParams params(double center_hz) const {
        TuningParams p;
        p.center_hz = center_hz;
        p.mode = parse_mode(mode);
        p.window = parse_window(window);
        p.order = order;
        p.step_hz = step_khz * 1e3;
        p.offset_hz = snap_to_step(offset_hz, p.step_hz);
        p.baseband_hz = baseband_hz.value_or(DemodConfig::defaults(p.mode).audio_cutoff_hz);
        p.gain_db = gain_db;
        p.deviation_hz = deviation_hz;
        return p;
    }
};

struct TxFlags {
    std::string mode = "NFM";
    double carrier_hz = 0.0;
    std::optional<double> deviation_hz;
    double depth = 0.5;
    std::optional<double> audio_bw_hz;
    std::optional<double> preemphasis_us;

    void add(CLI::App* app, const std::string& prefix = "") {
        app->add_option("--" + prefix + "mode", mode, "Modulation: AM, DSB, USB, LSB, NFM, WFM")
            ->check(kModeCheck)
            ->capture_default_str();
        app->add_option("--" + prefix + "carrier-hz", carrier_hz,
                        "Carrier offset from the capture center (Hz); GPIO: pin frequency")
            ->capture_default_str();
        app->add_option("--" + prefix + "deviation-hz", deviation_hz, "FM deviation (Hz); default 2500, WFM 75000")
            ->check(CLI::PositiveNumber);
        app->add_option("--" + prefix + "depth", depth, "AM modulation depth, (0, 1]")->capture_default_str();
        app->add_option("--" + prefix + "audio-bw-hz", audio_bw_hz, "Highest audio frequency carried (Hz)")
            ->check(CLI::PositiveNumber);
        app->add_option("--" + prefix + "preemphasis-us", preemphasis_us,
                        "FM pre-emphasis time constant (us); default 50 for WFM, else 0");
    }

    TxConfig config(double sample_rate_hz) const {
        TxConfig c = TxConfig::defaults(parse_mode(mode), sample_rate_hz);
        c.carrier_hz = carrier_hz;
        if (deviation_hz) c.deviation_hz = *deviation_hz;
        c.am_depth = depth;
        if (audio_bw_hz) c.audio_bandwidth_hz = *audio_bw_hz;
        if (preemphasis_us) c.preemphasis_us = *preemphasis_us;
        c.validate();
        return c;
    }
};

// --- rx --------------------------------------------------------------------------------------

struct RxCmd {
    fs::path in, meta, out;
    TuneFlags tune;
    bool benchmark = false;
    double bench_seconds = 2.0;

    int run() const {
        if (benchmark) return run_benchmark();
        const CaptureMeta m = read_capture_meta(meta);
        if (m.hardware) check_tuner_range(m.center_hz);
        CaptureReader reader(in, meta);
        const TuningParams p = tune.params(m.center_hz);
        RxChain rx(p, m.sample_rate_hz, m.center_hz);

        constexpr std::size_t kSnrSamples = 1u << 21;
        IqBlock snr_block;
        snr_block.sample_rate_hz = m.sample_rate_hz;
        snr_block.center_hz = m.center_hz;
        AudioBlock audio;
        std::uint64_t total = 0;
        const double gain = std::pow(10.0, p.gain_db / 20.0);
        while (auto b = reader.next()) {
            if (gain != 1.0) {
                for (auto& z : b->samples) z *= gain;
            }
            total += b->samples.size();
            if (snr_block.samples.size() < kSnrSamples) {
                const auto take = std::min(kSnrSamples - snr_block.samples.size(), b->samples.size());
                snr_block.samples.insert(snr_block.samples.end(), b->samples.begin(), b->samples.begin() + take);
            }
            const auto o = rx.process(*b);
            audio.samples.insert(audio.samples.end(), o.audio.samples.begin(), o.audio.samples.end());
        }
        write_wav(audio, out);

        json j{{"command", "rx"},
               {"samples", total},
               {"audio_samples", audio.samples.size()},
               {"offset_hz", p.offset_hz},
               {"mode", to_string(p.mode)},
               {"out", out.string()}};
        try {
            const double snr = estimate_snr(snr_block, p.tuned_hz() + ssb_center_shift(p, rx.plan()),
                                            rx.plan().occupied_bw_hz);
            j["snr_db"] = snr;
            j["quality"] = to_string(classify_quality(snr));
        } catch (const ValueError& e) {
            std::cerr << "snr estimate unavailable: " << e.what() << '\n';
            j["snr_db"] = nullptr;
            j["quality"] = nullptr;
        }
        emit(j);
        return 0;
    }

    static double ssb_center_shift(const TuningParams& p, const RxPlan& plan) {
        if (p.mode == DemodMode::SSB_USB) return plan.occupied_bw_hz / 2.0;
        if (p.mode == DemodMode::SSB_LSB) return -plan.occupied_bw_hz / 2.0;
        return 0.0;
    }

    int run_benchmark() const {
        std::vector<IqBlock> blocks;
        double rate = kMaxRtlSampleRateHz, center = 100e6;
        if (!in.empty()) {
            const auto m = read_capture_meta(meta);
            rate = m.sample_rate_hz;
            center = m.center_hz;
            blocks = read_capture(in, meta);
        } else {
            // Synthetic NFM station; synthesis is excluded from the timing.
            StationConfig st = StationConfig::defaults(parse_mode(tune.mode));
            st.freq_hz = center + tune.offset_hz;
            blocks = compose_scene({st}, center, rate, bench_seconds, 1);
        }
        const TuningParams p = tune.params(center);
        RxChain rx(p, rate, center);
        std::uint64_t samples = 0, audio = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& b : blocks) {
            audio += rx.process(b).audio.samples.size();
            samples += b.samples.size();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        emit({{"command", "rx"},
              {"benchmark", true},
              {"mode", to_string(p.mode)},
              {"taps", p.order + 1},
              {"decimation", rx.plan().decimation},
              {"samples", samples},
              {"audio_samples", audio},
              {"seconds", secs},
              {"samples_per_s", secs > 0 ? static_cast<double>(samples) / secs : 0.0}});
        return 0;
    }
};

// --- tx --------------------------------------------------------------------------------------

struct TxCmd {
    fs::path in, out, meta;
    TxFlags tx;
    double rate = 240000.0;
    double center = 100e6;
    bool gpio = false;

    int run() const {
        const TxConfig c = tx.config(rate);
        auto wav = read_wav(in);
        if (wav.rate_hz != kAudioRateHz) {
            LinearInterpolator<double> interp(wav.rate_hz, kAudioRateHz);
            std::vector<double> r;
            interp.process(wav.samples, r);
            wav.samples = std::move(r);
        }
        std::vector<Sample> iq;
        if (gpio) {
            for (double v : gpio_fm_waveform(wav.samples, c)) iq.emplace_back(v, 0.0);
        } else {
            iq = Modulator(c).process(wav.samples);
            fit_full_scale(iq);
        }
        CaptureMeta m;
        m.sample_rate_hz = rate;
        m.center_hz = center;
        const fs::path meta_path = meta.empty() ? default_meta(out) : meta;
        CaptureWriter w(out, meta_path, m);
        w.write(iq);
        w.close();
        emit({{"command", "tx"},
              {"mode", to_string(c.mode)},
              {"gpio", gpio},
              {"samples", iq.size()},
              {"out", out.string()},
              {"meta", meta_path.string()}});
        return 0;
    }
};

// --- synth -----------------------------------------------------------------------------------

struct SynthCmd {
    fs::path scene, out, meta;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;

    int run() const {
        SceneSpec s = load_scene(scene);
        if (seed) s.seed = *seed;
        if (duration) s.duration_s = *duration;
        s.validate();
        SceneSource src(s);
        CaptureMeta m;
        m.sample_rate_hz = s.sample_rate_hz;
        m.center_hz = s.center_hz;
        m.gain_db = s.channel.gain_db;
        const fs::path meta_path = meta.empty() ? default_meta(out) : meta;
        CaptureWriter w(out, meta_path, m);
        std::uint64_t n = 0;
        while (auto b = src.next(kDefaultBlockSize)) {
            w.write(b->samples);
            n += b->samples.size();
        }
        w.close();
        emit({{"command", "synth"},
              {"samples", n},
              {"stations", s.stations.size()},
              {"seed", s.seed},
              {"out", out.string()},
              {"meta", meta_path.string()}});
        return 0;
    }
};

// --- loopback --------------------------------------------------------------------------------

struct LoopbackCmd {
    std::uint64_t seed = 1;
    std::optional<double> snr_db;
    double duration = 0.5;
    double rate = 240000.0;

    int run() const {
        LoopbackOptions o;
        o.seed = seed;
        o.snr_db = snr_db;
        o.duration_s = duration;
        o.sample_rate_hz = rate;
        for (auto mode : kAllModes) {
            const auto r = run_loopback(mode, o);
            json j{{"command", "loopback"}, {"mode", to_string(mode)}, {"correlation", r.correlation},
                   {"lag", r.lag}};
            j["snr_db"] = snr_db ? json(*snr_db) : json(nullptr);
            emit(j);
        }
        return 0;
    }
};

// --- quality ---------------------------------------------------------------------------------

struct QualityCmd {
    fs::path out;
    std::vector<double> snrs{25.0, 15.0, 5.0};
    std::uint64_t seed = 7;
    double duration = 0.25;
    unsigned threads = 0;

    int run() const {
        QualitySceneTemplate t;
        t.seed = seed;
        t.duration_s = duration;
        const auto reports = quality_matrix(t, reference_quality_grid(), snrs, threads);
        std::size_t matching = 0;
        for (const auto& r : reports) matching += (r.quality == classify_quality(r.injected_snr_db));
        json summary{{"command", "quality"}, {"cells", reports.size()}, {"matching", matching}};
        if (out.empty()) {
            write_quality_csv(std::cout, reports);
            std::cerr << summary.dump() << '\n';
        } else {
            std::ofstream f(out);
            if (!f) throw IoError("cannot write " + out.string());
            write_quality_csv(f, reports);
            if (!f) throw IoError("write failed for " + out.string());
            summary["out"] = out.string();
            emit(summary);
        }
        return 0;
    }
};

// --- spectrum --------------------------------------------------------------------------------

struct SpectrumCmd {
    fs::path in, meta, out;
    std::size_t fft = 2048;
    std::size_t hop = 0;
    std::string window = "BlackmanHarris4";
    std::size_t max_frames = 0;

    int run() const {
        if ((fft & (fft - 1)) != 0 || fft < 16) throw ValueError("--fft must be a power of two >= 16");
        const std::size_t step = hop == 0 ? fft : hop;
        const WindowKind w = parse_window(window);
        CaptureReader reader(in, meta);
        std::ofstream f;
        std::ostream* os = &std::cout;
        if (!out.empty()) {
            f.open(out);
            if (!f) throw IoError("cannot write " + out.string());
            os = &f;
        }
        *os << "frame_index,bin,db\n";
        IqBlock carry;
        carry.sample_rate_hz = reader.meta().sample_rate_hz;
        carry.center_hz = reader.meta().center_hz;
        std::size_t frame = 0;
        bool done = false;
        while (!done) {
            auto b = reader.next();
            if (!b) break;
            carry.samples.insert(carry.samples.end(), b->samples.begin(), b->samples.end());
            if (carry.samples.size() < fft) continue;
            const auto frames = spectrogram(carry, fft, step, w);
            for (const auto& fr : frames) {
                for (std::size_t k = 0; k < fr.bins.size(); ++k) {
                    *os << frame << ',' << k << ',' << std::setprecision(6) << fr.bins[k] << '\n';
                }
                if (++frame == max_frames) {
                    done = true;
                    break;
                }
            }
            const std::size_t consumed = frames.size() * step;
            carry.samples.erase(carry.samples.begin(),
                                carry.samples.begin() + static_cast<std::ptrdiff_t>(std::min(consumed, carry.samples.size())));
        }
        if (!*os) throw IoError("spectrum write failed");
        if (!out.empty()) emit({{"command", "spectrum"}, {"frames", frame}, {"fft", fft}, {"out", out.string()}});
        return 0;
    }
};

// --- bridge ----------------------------------------------------------------------------------

struct BridgeCmd {
    fs::path in, meta, out, out_meta;
    TuneFlags rx;
    TxFlags tx;

    int run() const {
        const CaptureMeta m = read_capture_meta(meta);
        if (m.hardware) check_tuner_range(m.center_hz);
        CaptureReader reader(in, meta);
        const TxConfig tc = tx.config(m.sample_rate_hz);
        Bridge bridge(rx.params(m.center_hz), tc, m.sample_rate_hz, m.center_hz);
        const double headroom = stream_headroom(tc);
        CaptureMeta om = m;
        om.hardware = false;
        const fs::path meta_path = out_meta.empty() ? default_meta(out) : out_meta;
        CaptureWriter w(out, meta_path, om);
        std::uint64_t n = 0;
        while (auto b = reader.next()) {
            auto o = bridge.process(*b);
            for (auto& z : o.samples) z *= headroom;
            w.write(o.samples);
            n += o.samples.size();
        }
        w.close();
        emit({{"command", "bridge"}, {"samples", n}, {"out", out.string()}, {"meta", meta_path.string()}});
        return 0;
    }
};

// --- serve -----------------------------------------------------------------------------------

struct ServeCmd {
    std::string bind = "127.0.0.1";
    std::uint16_t port = 8073;
    fs::path scene, in, meta;
    std::size_t block_size = 16384;
    std::size_t fft = 2048;
    double spectrum_rate = 15.0;
    bool no_realtime = false;
    double duration = 0.0;

    int run() const {
        ServiceConfig c;
        c.bind_address = bind;
        c.port = port;
        c.block_size = block_size;
        c.fft_size = fft;
        c.spectrum_rate_hz = spectrum_rate;
        c.realtime = !no_realtime;
        if (!scene.empty()) {
            c.default_source = SceneFileSpec{scene};
        } else if (!in.empty()) {
            c.default_source = FileSourceSpec{in, meta.empty() ? default_meta(in) : meta};
        }
        Service svc(c);
        svc.start();
        emit({{"command", "serve"}, {"address", bind}, {"port", svc.port()}});
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        const auto t0 = std::chrono::steady_clock::now();
        while (!g_stop) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            if (duration > 0 &&
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= duration) {
                break;
            }
        }
        svc.stop();
        const auto s = svc.stats();
        emit({{"command", "serve"},
              {"stopped", true},
              {"messages", s.messages},
              {"errors", s.errors},
              {"spectrum_frames", s.spectrum_frames},
              {"audio_frames", s.audio_frames}});
        return 0;
    }
};

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Format:
        case ErrorKind::Config:
        case ErrorKind::Io: return kExitIo;
        default: return kExitDsp;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdrtk: SDR transceiver toolkit (RTL u8 I/Q captures, synthetic scenes, demodulation)"};
    app.require_subcommand(1);

    RxCmd rx;
    auto* c_rx = app.add_subcommand("rx", "Demodulate a capture to a 48 kHz WAV");
    c_rx->add_option("--in", rx.in, "Raw u8 I/Q capture");
    c_rx->add_option("--meta", rx.meta, "Capture sidecar JSON (default: <in>.json)");
    c_rx->add_option("--out", rx.out, "Output WAV (48 kHz, PCM16 mono)");
    rx.tune.add(c_rx);
    c_rx->add_flag("--benchmark", rx.benchmark,
                   "Time the mix + FIR + demod chain and report samples/s (synthetic 2.4 MS/s input without --in)");
    c_rx->add_option("--benchmark-seconds", rx.bench_seconds, "Synthetic benchmark input length (s)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    TxCmd tx;
    auto* c_tx = app.add_subcommand("tx", "Modulate a WAV into a capture");
    c_tx->add_option("--in", tx.in, "Input WAV (mono PCM16)")->required();
    c_tx->add_option("--out", tx.out, "Output raw capture")->required();
    c_tx->add_option("--meta", tx.meta, "Output sidecar JSON (default: <out>.json)");
    tx.tx.add(c_tx);
    c_tx->add_option("--sample-rate", tx.rate, "Output sample rate (Hz)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_tx->add_option("--center-hz", tx.center, "Center frequency recorded in the sidecar (Hz)")->capture_default_str();
    c_tx->add_flag("--gpio", tx.gpio, "Two-level GPIO FM model instead of I/Q (real part only)");

    SynthCmd synth;
    auto* c_synth = app.add_subcommand("synth", "Synthesize a scene JSON into a capture");
    c_synth->add_option("--scene", synth.scene, "Scene JSON")->required();
    c_synth->add_option("--out", synth.out, "Output raw capture")->required();
    c_synth->add_option("--meta", synth.meta, "Output sidecar JSON (default: <out>.json)");
    c_synth->add_option("--seed", synth.seed, "Override the scene seed");
    c_synth->add_option("--duration", synth.duration, "Override the scene duration (s)")->check(CLI::PositiveNumber);

    LoopbackCmd loop;
    auto* c_loop = app.add_subcommand("loopback", "Modulate/demodulate test audio in every mode; print correlations");
    c_loop->add_option("--seed", loop.seed, "Noise seed")->capture_default_str();
    c_loop->add_option("--snr-db", loop.snr_db, "In-band channel SNR (dB); noiseless when absent");
    c_loop->add_option("--duration", loop.duration, "Test audio length (s)")
        ->check(CLI::Range(0.2, 60.0))
        ->capture_default_str();
    c_loop->add_option("--sample-rate", loop.rate, "I/Q rate, a multiple of 48000 (Hz)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    QualityCmd quality;
    auto* c_q = app.add_subcommand("quality", "Run the synthetic quality matrix and write its CSV");
    c_q->add_option("--out", quality.out, "Output CSV (default: stdout)");
    c_q->add_option("--snr-db", quality.snrs, "Injected SNR values (dB)")->delimiter(',')->capture_default_str();
    c_q->add_option("--seed", quality.seed, "Scene seed")->capture_default_str();
    c_q->add_option("--duration", quality.duration, "Scene length per cell (s)")
        ->check(CLI::Range(0.05, 10.0))
        ->capture_default_str();
    c_q->add_option("--threads", quality.threads, "Worker threads (0: one per core)")->capture_default_str();

    SpectrumCmd spec;
    auto* c_sp = app.add_subcommand("spectrum", "Write spectrogram frames of a capture as CSV (frame_index,bin,db)");
    c_sp->add_option("--in", spec.in, "Raw u8 I/Q capture")->required();
    c_sp->add_option("--meta", spec.meta, "Capture sidecar JSON (default: <in>.json)");
    c_sp->add_option("--out", spec.out, "Output CSV (default: stdout)");
    c_sp->add_option("--fft", spec.fft, "FFT size (power of two, bins)")->capture_default_str();
    c_sp->add_option("--hop", spec.hop, "Frame hop (samples; default: FFT size)");
    c_sp->add_option("--window", spec.window, "Window: Blackman, BH4, BH7")->check(kWindowCheck)->capture_default_str();
    c_sp->add_option("--max-frames", spec.max_frames, "Stop after this many frames (0: all)");

    BridgeCmd bridge;
    auto* c_br = app.add_subcommand("bridge", "Receive at one frequency and re-modulate the audio at another");
    c_br->add_option("--in", bridge.in, "Raw u8 I/Q capture")->required();
    c_br->add_option("--meta", bridge.meta, "Capture sidecar JSON (default: <in>.json)");
    c_br->add_option("--out", bridge.out, "Output raw capture")->required();
    c_br->add_option("--out-meta", bridge.out_meta, "Output sidecar JSON (default: <out>.json)");
    bridge.rx.add(c_br);
    bridge.tx.add(c_br, "tx-");

    ServeCmd serve;
    auto* c_sv = app.add_subcommand("serve", "Run the WebSocket control/streaming service");
    c_sv->add_option("--bind", serve.bind, "Listen address")->capture_default_str();
    c_sv->add_option("--port", serve.port, "TCP port (0: any free port)")->capture_default_str();
    c_sv->add_option("--scene", serve.scene, "Default source: scene JSON");
    c_sv->add_option("--in", serve.in, "Default source: raw capture (looped)");
    c_sv->add_option("--meta", serve.meta, "Sidecar for --in (default: <in>.json)");
    c_sv->add_option("--block-size", serve.block_size, "Samples per processing block")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_sv->add_option("--fft", serve.fft, "Spectrum FFT size (bins)")->capture_default_str();
    c_sv->add_option("--spectrum-rate", serve.spectrum_rate, "Spectrum frames per second (Hz)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_sv->add_flag("--no-realtime", serve.no_realtime, "Process as fast as possible instead of at the source rate");
    c_sv->add_option("--duration", serve.duration, "Stop after this many seconds (0: until signaled)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
        // Cross-flag checks that CLI11 cannot express, still before any I/O.
        if (c_rx->parsed() && !rx.benchmark) {
            if (rx.in.empty() || rx.out.empty()) throw CLI::ValidationError("rx", "--in and --out are required");
        }
        if (c_rx->parsed() && !rx.in.empty() && rx.meta.empty()) rx.meta = default_meta(rx.in);
        if (c_sp->parsed() && spec.meta.empty()) spec.meta = default_meta(spec.in);
        if (c_br->parsed() && bridge.meta.empty()) bridge.meta = default_meta(bridge.in);
        if (c_sv->parsed() && !serve.scene.empty() && !serve.in.empty()) {
            throw CLI::ValidationError("serve", "--scene and --in are exclusive");
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitFlags;
    }

    try {
        if (c_rx->parsed()) return rx.run();
        if (c_tx->parsed()) return tx.run();
        if (c_synth->parsed()) return synth.run();
        if (c_loop->parsed()) return loop.run();
        if (c_q->parsed()) return quality.run();
        if (c_sp->parsed()) return spec.run();
        if (c_br->parsed()) return bridge.run();
        if (c_sv->parsed()) return serve.run();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDsp;
    }
    return kExitFlags;
}
