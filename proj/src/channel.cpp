#include "sdrtk/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "sdrtk/dsp.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/iq_io.hpp"

namespace sdrtk {

using nlohmann::json;

GaussianRng::GaussianRng(std::uint64_t seed) : engine_(seed) {}

double GaussianRng::uniform() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double GaussianRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

Sample GaussianRng::complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kNoiseAudioRms = 1.0 / 3.0;

struct ToneGen {
    ToneAudio tone;
    std::uint64_t n = 0;
    void fill(std::vector<double>& out, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i, ++n) {
            const double cycles = std::fmod(tone.freq_hz * static_cast<double>(n), kAudioRateHz) / kAudioRateHz;
            out.push_back(tone.amplitude * std::sin(2.0 * std::numbers::pi * cycles));
        }
    }
};

struct FileGen {
    std::vector<double> samples;
    std::size_t pos = 0;
    void fill(std::vector<double>& out, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(samples[pos]);
            pos = (pos + 1) % samples.size();
        }
    }
};

struct NoiseGen {
    GaussianRng rng;
    RealDecimator filter;
    double scale = 1.0;
    std::vector<double> white, shaped;
    void fill(std::vector<double>& out, std::size_t count) {
        white.resize(count);
        for (auto& w : white) w = rng.normal();
        shaped.clear();
        filter.process(white, shaped);
        for (double v : shaped) out.push_back(std::clamp(v * scale, -1.0, 1.0));
    }
};

std::vector<double> load_audio_file(const std::filesystem::path& path) {
    const AudioBlock wav = read_wav(path);
    if (wav.samples.empty()) throw FormatError("audio file " + path.string() + " holds no samples");
    if (wav.rate_hz == kAudioRateHz) return wav.samples;
    LinearInterpolator<double> interp(wav.rate_hz, kAudioRateHz);
    std::vector<double> out;
    interp.process(wav.samples, out);
    if (out.empty()) throw FormatError("audio file " + path.string() + " too short to resample");
    return out;
}

}  // namespace

struct AudioGenerator::Impl {
    std::variant<ToneGen, FileGen, NoiseGen> gen;
};

AudioGenerator::AudioGenerator(const AudioSource& source, std::uint64_t seed) : impl_(std::make_unique<Impl>()) {
    if (const auto* t = std::get_if<ToneAudio>(&source)) {
        if (!std::isfinite(t->freq_hz) || t->freq_hz < 0.0 || t->freq_hz >= kAudioRateHz / 2.0) {
            throw ValueError("tone frequency " + std::to_string(t->freq_hz) + " Hz outside [0, 24000)");
        }
        impl_->gen = ToneGen{*t};
    } else if (const auto* f = std::get_if<FileAudio>(&source)) {
        impl_->gen = FileGen{load_audio_file(f->path)};
    } else {
        const auto& nz = std::get<NoiseAudio>(source);
        if (!(nz.bandwidth_hz > 0.0 && nz.bandwidth_hz < kAudioRateHz / 2.0)) {
            throw ValueError("noise bandwidth " + std::to_string(nz.bandwidth_hz) + " Hz outside (0, 24000)");
        }
        auto taps = design_lowpass({256, nz.bandwidth_hz, WindowKind::BlackmanHarris4}, kAudioRateHz);
        double energy = 0.0;
        for (double h : taps) energy += h * h;
        NoiseGen g{GaussianRng(seed), RealDecimator(std::move(taps), 1), kNoiseAudioRms / std::sqrt(energy), {}, {}};
        impl_->gen = std::move(g);
    }
}

AudioGenerator::~AudioGenerator() = default;
AudioGenerator::AudioGenerator(AudioGenerator&&) noexcept = default;
AudioGenerator& AudioGenerator::operator=(AudioGenerator&&) noexcept = default;

std::vector<double> AudioGenerator::next(std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    std::visit([&](auto& g) { g.fill(out, n); }, impl_->gen);
    return out;
}

// ---------------------------------------------------------------------------

StationConfig StationConfig::defaults(DemodMode mode) {
    StationConfig s;
    s.mode = mode;
    if (mode == DemodMode::WFM) {
        s.deviation_hz = 75000.0;
        s.audio_bandwidth_hz = 15000.0;
    }
    return s;
}

TxConfig StationConfig::tx_config(double scene_center_hz, double sample_rate_hz) const {
    TxConfig c = TxConfig::defaults(mode, sample_rate_hz);
    c.carrier_hz = freq_hz - scene_center_hz;
    c.deviation_hz = deviation_hz;
    c.am_depth = am_depth;
    c.audio_bandwidth_hz = audio_bandwidth_hz;
    return c;
}

double StationConfig::nominal_bandwidth_hz() const {
    return sdrtk::nominal_bandwidth_hz(mode, deviation_hz, audio_bandwidth_hz);
}

void SceneSpec::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) throw ValueError("scene sample rate must be positive");
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw ValueError("scene duration must be positive");
    if (!std::isfinite(center_hz)) throw ValueError("scene center must be finite");
    for (std::size_t i = 0; i < stations.size(); ++i) {
        if (!(std::abs(stations[i].freq_hz - center_hz) < sample_rate_hz / 2.0)) {
            throw ValueError("station " + std::to_string(i) + " at " + std::to_string(stations[i].freq_hz) +
                             " Hz lies outside the scene band");
        }
    }
    if (channel.snr_db) {
        if (!std::isfinite(*channel.snr_db)) throw ValueError("channel snr_db must be finite");
        if (!stations.empty() && channel.reference >= stations.size()) {
            throw ValueError("channel reference " + std::to_string(channel.reference) + " names no station");
        }
    }
    if (!std::isfinite(channel.gain_db) || !std::isfinite(channel.freq_offset_hz)) {
        throw ValueError("channel gain and offset must be finite");
    }
}

namespace {

template <class T>
T field_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("scene field '") + key + "' has the wrong type");
    }
}

AudioSource parse_audio(const json& a) {
    if (!a.is_object() || a.size() != 1) throw ConfigError("station audio must be one of {tone|file|noise}");
    const auto it = a.begin();
    const std::string key = it.key();
    const json& val = it.value();
    try {
        if (key == "tone") {
            if (val.is_number()) return ToneAudio{val.get<double>(), 1.0};
            return ToneAudio{field_or(val, "freq_hz", 1000.0), field_or(val, "amplitude", 1.0)};
        }
        if (key == "file") return FileAudio{val.get<std::string>()};
        if (key == "noise") {
            if (val.is_number()) return NoiseAudio{val.get<double>()};
            return NoiseAudio{field_or(val, "bandwidth_hz", 3000.0)};
        }
    } catch (const json::exception&) {
        throw ConfigError("station audio '" + key + "' has the wrong type");
    }
    throw ConfigError("unknown station audio source '" + key + "'");
}

json audio_to_json(const AudioSource& a) {
    if (const auto* t = std::get_if<ToneAudio>(&a)) {
        if (t->amplitude == 1.0) return {{"tone", t->freq_hz}};
        return {{"tone", {{"freq_hz", t->freq_hz}, {"amplitude", t->amplitude}}}};
    }
    if (const auto* f = std::get_if<FileAudio>(&a)) return {{"file", f->path.string()}};
    return {{"noise", std::get<NoiseAudio>(a).bandwidth_hz}};
}

}  // namespace

SceneSpec parse_scene_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("scene JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("scene JSON must be an object");
    SceneSpec s;
    if (!j.contains("center_hz")) throw ConfigError("scene is missing center_hz");
    s.center_hz = field_or(j, "center_hz", s.center_hz);
    s.sample_rate_hz = field_or(j, "sample_rate_hz", s.sample_rate_hz);
    s.duration_s = field_or(j, "duration_s", s.duration_s);
    s.seed = field_or<std::uint64_t>(j, "seed", s.seed);
    if (j.contains("stations")) {
        if (!j["stations"].is_array()) throw ConfigError("scene stations must be an array");
        for (const auto& st : j["stations"]) {
            if (!st.is_object() || !st.contains("freq_hz")) throw ConfigError("station needs freq_hz");
            DemodMode mode;
            try {
                mode = parse_mode(field_or<std::string>(st, "mode", "NFM"));
            } catch (const ValueError& e) {
                throw ConfigError(e.what());
            }
            StationConfig c = StationConfig::defaults(mode);
            c.freq_hz = field_or(st, "freq_hz", 0.0);
            c.deviation_hz = field_or(st, "deviation_hz", c.deviation_hz);
            c.am_depth = field_or(st, "depth", field_or(st, "am_depth", c.am_depth));
            c.audio_bandwidth_hz = field_or(st, "audio_bandwidth_hz", c.audio_bandwidth_hz);
            c.power_db = field_or(st, "power_db", c.power_db);
            if (st.contains("audio")) c.audio = parse_audio(st["audio"]);
            s.stations.push_back(std::move(c));
        }
    }
    if (j.contains("channel")) {
        const auto& ch = j["channel"];
        if (!ch.is_object()) throw ConfigError("scene channel must be an object");
        if (ch.contains("snr_db") && !ch["snr_db"].is_null()) s.channel.snr_db = field_or(ch, "snr_db", 0.0);
        s.channel.reference = field_or<std::size_t>(ch, "reference", 0);
        s.channel.freq_offset_hz = field_or(ch, "freq_offset_hz", 0.0);
        s.channel.gain_db = field_or(ch, "gain_db", 0.0);
        s.channel.hardware_noise = field_or(ch, "hardware_noise", false);
    }
    s.validate();
    return s;
}

SceneSpec load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene_json(ss.str());
}

std::string scene_to_json(const SceneSpec& scene) {
    json j{{"center_hz", scene.center_hz},
           {"sample_rate_hz", scene.sample_rate_hz},
           {"duration_s", scene.duration_s},
           {"seed", scene.seed}};
    json st = json::array();
    for (const auto& s : scene.stations) {
        st.push_back({{"freq_hz", s.freq_hz},
                      {"mode", to_string(s.mode)},
                      {"deviation_hz", s.deviation_hz},
                      {"depth", s.am_depth},
                      {"audio_bandwidth_hz", s.audio_bandwidth_hz},
                      {"audio", audio_to_json(s.audio)},
                      {"power_db", s.power_db}});
    }
    j["stations"] = st;
    json ch{{"reference", scene.channel.reference},
            {"gain_db", scene.channel.gain_db},
            {"freq_offset_hz", scene.channel.freq_offset_hz},
            {"hardware_noise", scene.channel.hardware_noise}};
    ch["snr_db"] = scene.channel.snr_db ? json(*scene.channel.snr_db) : json(nullptr);
    j["channel"] = ch;
    return j.dump(2);
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t station_seed(std::uint64_t scene_seed, std::size_t index) { return derive_seed(scene_seed, index + 1); }

struct StationStream {
    AudioGenerator audio;
    Modulator mod;
    double amplitude;
    double ratio;  // output samples per audio sample
    std::vector<Sample> pending;
    std::size_t head = 0;

    StationStream(const StationConfig& s, double center, double fs, std::uint64_t seed)
        : audio(s.audio, seed),
          mod(s.tx_config(center, fs)),
          amplitude(std::pow(10.0, s.power_db / 20.0)),
          ratio(fs / kAudioRateHz) {}

    // Adds the next n samples of this station into acc.
    void add_into(std::span<Sample> acc) {
        const std::size_t n = acc.size();
        while (pending.size() - head < n) {
            if (head > 0) {
                pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(head));
                head = 0;
            }
            const std::size_t need = n - pending.size();
            const auto chunk = static_cast<std::size_t>(std::ceil(static_cast<double>(need) / ratio)) + 1;
            const auto a = audio.next(chunk);
            const auto iq = mod.process(a);
            pending.insert(pending.end(), iq.begin(), iq.end());
        }
        for (std::size_t i = 0; i < n; ++i) acc[i] += amplitude * pending[head + i];
        head += n;
    }
};

}  // namespace

struct SceneComposer::Impl {
    std::vector<StationStream> stations;
    double center = 0.0, fs = 1.0;
    bool unbounded = false;
    std::uint64_t limit = 0;
};

SceneComposer::SceneComposer(std::vector<StationConfig> stations, double center_hz, double sample_rate_hz,
                             double duration_s, std::uint64_t seed, bool unbounded)
    : impl_(std::make_unique<Impl>()) {
    SceneSpec check;
    check.center_hz = center_hz;
    check.sample_rate_hz = sample_rate_hz;
    check.duration_s = unbounded ? 1.0 : duration_s;
    check.stations = stations;
    check.validate();
    impl_->center = center_hz;
    impl_->fs = sample_rate_hz;
    impl_->unbounded = unbounded;
    impl_->limit = static_cast<std::uint64_t>(std::llround(duration_s * sample_rate_hz));
    impl_->stations.reserve(stations.size());
    for (std::size_t i = 0; i < stations.size(); ++i) {
        impl_->stations.emplace_back(stations[i], center_hz, sample_rate_hz, station_seed(seed, i));
    }
}

SceneComposer::~SceneComposer() = default;
SceneComposer::SceneComposer(SceneComposer&&) noexcept = default;
SceneComposer& SceneComposer::operator=(SceneComposer&&) noexcept = default;

std::optional<IqBlock> SceneComposer::next(std::size_t max_samples) {
    auto& m = *impl_;
    std::size_t n = max_samples;
    if (!m.unbounded) {
        if (total_ >= m.limit) return std::nullopt;
        n = static_cast<std::size_t>(std::min<std::uint64_t>(n, m.limit - total_));
    }
    if (n == 0) return std::nullopt;
    IqBlock b;
    b.samples.assign(n, Sample{});
    b.sample_rate_hz = m.fs;
    b.center_hz = m.center;
    b.start_index = total_;
    for (auto& s : m.stations) s.add_into(b.samples);
    total_ += n;
    return b;
}

std::vector<IqBlock> compose_scene(const std::vector<StationConfig>& stations, double center_hz,
                                   double sample_rate_hz, double duration_s, std::uint64_t seed,
                                   std::size_t block_size) {
    SceneComposer c(stations, center_hz, sample_rate_hz, duration_s, seed);
    std::vector<IqBlock> out;
    while (auto b = c.next(block_size)) out.push_back(std::move(*b));
    return out;
}

double station_power(const StationConfig& station, double center_hz, double sample_rate_hz, std::uint64_t seed,
                     double window_s) {
    StationStream s(station, center_hz, sample_rate_hz, seed);
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(window_s * sample_rate_hz)));
    std::vector<Sample> buf(n);
    s.add_into(buf);
    double p = 0.0;
    for (const auto& z : buf) p += std::norm(z);
    return p / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

double AwgnParams::noise_variance() const {
    if (!(signal_power >= 0.0) || !(occupied_bw_hz > 0.0) || !(sample_rate_hz > 0.0) || !std::isfinite(snr_db)) {
        throw ValueError("AWGN parameters must be finite with positive bandwidths");
    }
    return signal_power * sample_rate_hz / (occupied_bw_hz * std::pow(10.0, snr_db / 10.0));
}

AwgnChannel::AwgnChannel(const AwgnParams& params, std::uint64_t seed)
    : variance_(params.noise_variance()), rng_(seed) {}

void AwgnChannel::apply(std::span<Sample> samples) {
    for (auto& z : samples) z += rng_.complex_normal(variance_);
}

FrontEnd::FrontEnd(const FrontEndParams& params, double sample_rate_hz, std::uint64_t seed)
    : params_(params), amplitude_(std::pow(10.0, params.gain_db / 20.0)), rng_(seed) {
    const double floor_dbm = -174.0 + params.noise_figure_db + 10.0 * std::log10(sample_rate_hz);
    floor_variance_ = std::pow(10.0, (floor_dbm - params.full_scale_dbm + params.gain_db) / 10.0);
}

void FrontEnd::apply(IqBlock& block) {
    if (amplitude_ != 1.0) {
        for (auto& z : block.samples) z *= amplitude_;
    }
    if (params_.freq_offset_hz != 0.0) {
        mix_in_place(block.samples, -params_.freq_offset_hz, block.sample_rate_hz, block.start_index);
    }
    if (params_.hardware_noise) {
        for (auto& z : block.samples) z += rng_.complex_normal(floor_variance_);
    }
}

namespace {

FrontEndParams front_end_params(const ChannelSpec& c) {
    FrontEndParams p;
    p.gain_db = c.gain_db;
    p.freq_offset_hz = c.freq_offset_hz;
    p.hardware_noise = c.hardware_noise;
    return p;
}

const SceneSpec& validated(const SceneSpec& s) {
    s.validate();
    return s;
}

}  // namespace

SceneSource::SceneSource(const SceneSpec& spec, bool unbounded)
    : spec_(validated(spec)),
      composer_(spec.stations, spec.center_hz, spec.sample_rate_hz, spec.duration_s, spec.seed, unbounded),
      front_end_(front_end_params(spec.channel), spec.sample_rate_hz, derive_seed(spec.seed, 2000)) {
    if (spec_.channel.snr_db && !spec_.stations.empty()) {
        const auto ref = spec_.channel.reference;
        const auto& st = spec_.stations[ref];
        AwgnParams p;
        p.snr_db = *spec_.channel.snr_db;
        p.signal_power = station_power(st, spec_.center_hz, spec_.sample_rate_hz, station_seed(spec_.seed, ref),
                                       std::min(0.5, spec_.duration_s));
        p.occupied_bw_hz = st.nominal_bandwidth_hz();
        p.sample_rate_hz = spec_.sample_rate_hz;
        awgn_.emplace(p, derive_seed(spec_.seed, 1000));
    }
}

std::optional<IqBlock> SceneSource::next(std::size_t max_samples) {
    auto b = composer_.next(max_samples);
    if (!b) return b;
    if (awgn_) awgn_->apply(*b);
    front_end_.apply(*b);
    return b;
}

std::optional<double> SceneSource::noise_variance() const {
    if (!awgn_) return std::nullopt;
    return awgn_->noise_variance();
}

}  // namespace sdrtk
