#include "sdrtk/protocol.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "json.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/iq_io.hpp"

namespace sdrtk::wire {

using nlohmann::json;

namespace {

const json& require_object(const json& j, const char* what) {
    if (!j.is_object()) throw ProtocolError(std::string(what) + " must be a JSON object");
    return j;
}

double number(const json& j, const char* key) {
    if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ProtocolError(std::string("field '") + key + "' must be finite");
    return d;
}

std::optional<double> opt_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return number(j, key);
}

std::string text(const json& j, const char* key) {
    if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_string()) throw ProtocolError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

template <class F>
auto translate(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw ProtocolError(e.what());
    }
}

SourceSpec parse_source(const json& s) {
    require_object(s, "source");
    const std::string kind = text(s, "kind");
    if (kind == "file") return FileSourceSpec{text(s, "raw"), text(s, "meta")};
    if (kind == "scene") return SceneFileSpec{text(s, "path")};
    throw ProtocolError("unknown source kind '" + kind + "'");
}

TxConfig parse_tx(const json& t) {
    require_object(t, "tx");
    const DemodMode mode = t.contains("mode") ? translate([&] { return parse_mode(text(t, "mode")); }) : DemodMode::NFM;
    TxConfig c = TxConfig::defaults(mode, opt_number(t, "sample_rate_hz").value_or(240000.0));
    if (auto v = opt_number(t, "carrier_hz")) c.carrier_hz = *v;
    if (auto v = opt_number(t, "deviation_hz")) c.deviation_hz = *v;
    if (auto v = opt_number(t, "am_depth")) c.am_depth = *v;
    if (auto v = opt_number(t, "depth")) c.am_depth = *v;
    if (auto v = opt_number(t, "audio_bandwidth_hz")) c.audio_bandwidth_hz = *v;
    if (auto v = opt_number(t, "preemphasis_us")) c.preemphasis_us = *v;
    translate([&] {
        c.validate();
        return 0;
    });
    return c;
}

}  // namespace

Command parse_command(std::string_view message) {
    json j;
    try {
        j = json::parse(message);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    require_object(j, "message");
    const std::string type = text(j, "type");
    if (type == "configure") {
        ConfigureCmd c;
        c.center_hz = number(j, "center_hz");
        if (j.contains("source") && !j["source"].is_null()) c.source = parse_source(j["source"]);
        c.offset_hz = opt_number(j, "offset_hz");
        c.step_hz = opt_number(j, "step_hz");
        c.baseband_hz = opt_number(j, "baseband_hz");
        c.gain_db = opt_number(j, "gain_db");
        if (j.contains("mode")) c.mode = translate([&] { return parse_mode(text(j, "mode")); });
        if (j.contains("window")) c.window = translate([&] { return parse_window(text(j, "window")); });
        if (auto o = opt_number(j, "order")) {
            if (*o < 2 || *o > 100000 || std::floor(*o) != *o) throw ProtocolError("order must be an integer >= 2");
            c.order = static_cast<std::size_t>(*o);
        }
        return c;
    }
    if (type == "tune") return TuneCmd{number(j, "offset_hz")};
    if (type == "set_mode") {
        SetModeCmd c;
        c.mode = translate([&] { return parse_mode(text(j, "mode")); });
        c.baseband_hz = opt_number(j, "baseband_hz");
        return c;
    }
    if (type == "set_gain") return SetGainCmd{number(j, "gain_db")};
    if (type == "start_rx") return StartRxCmd{};
    if (type == "start_tx") {
        StartTxCmd c;
        c.tx = parse_tx(j.contains("tx") ? j["tx"] : json::object());
        if (auto t = opt_number(j, "tone_hz")) c.tone_hz = *t;
        if (j.contains("tx") && j["tx"].is_object()) {
            if (auto t = opt_number(j["tx"], "tone_hz")) c.tone_hz = *t;
        }
        if (!(c.tone_hz >= 0.0 && c.tone_hz < kAudioRateHz / 2.0)) throw ProtocolError("tone_hz outside [0, 24000)");
        return c;
    }
    if (type == "stop") {
        StopCmd c;
        const std::string which = j.contains("which") ? text(j, "which") : "all";
        if (which == "rx") c.which = StopWhich::Rx;
        else if (which == "tx") c.which = StopWhich::Tx;
        else if (which == "all") c.which = StopWhich::All;
        else throw ProtocolError("stop.which must be rx, tx or all");
        return c;
    }
    throw ProtocolError("unknown message type '" + type + "'");
}

std::string status_json(const Status& s) {
    json j{{"type", "status"},
           {"state", to_string(s.state)},
           {"offset_hz", s.offset_hz},
           {"mode", to_string(s.mode)},
           {"gain_db", s.gain_db},
           {"center_hz", s.center_hz}};
    if (s.snr_db && std::isfinite(*s.snr_db)) {
        j["snr_db"] = *s.snr_db;
        j["quality"] = to_string(classify_quality(*s.snr_db));
    } else {
        j["snr_db"] = nullptr;
        j["quality"] = nullptr;
    }
    return j.dump();
}

std::string error_json(std::string_view message) {
    return json{{"type", "error"}, {"message", std::string(message)}}.dump(-1, ' ', false,
                                                                          json::error_handler_t::replace);
}

// --- binary frames ---------------------------------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    return v;
}
std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
    return v;
}

constexpr std::size_t kSpectrumHeader = 1 + 4 + 8 + 8;
constexpr std::size_t kAudioHeader = 1 + 4;

}  // namespace

std::vector<std::uint8_t> encode_spectrum(const SpectrumFrame& frame) {
    std::vector<std::uint8_t> b;
    b.reserve(kSpectrumHeader + 4 * frame.bins.size());
    b.push_back(kSpectrumTag);
    put_u32(b, static_cast<std::uint32_t>(frame.bins.size()));
    put_u64(b, std::bit_cast<std::uint64_t>(frame.center_hz));
    put_u64(b, std::bit_cast<std::uint64_t>(frame.span_hz));
    for (double db : frame.bins) put_u32(b, std::bit_cast<std::uint32_t>(static_cast<float>(db)));
    return b;
}

SpectrumFrame decode_spectrum(std::span<const std::uint8_t> b) {
    if (b.size() < kSpectrumHeader || b[0] != kSpectrumTag) throw ProtocolError("not a spectrum frame");
    const std::uint32_t n = get_u32(b, 1);
    if (b.size() != kSpectrumHeader + 4ull * n) throw ProtocolError("spectrum frame length mismatch");
    SpectrumFrame f;
    f.center_hz = std::bit_cast<double>(get_u64(b, 5));
    f.span_hz = std::bit_cast<double>(get_u64(b, 13));
    f.fft_size = n;
    f.bins.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) f.bins[i] = std::bit_cast<float>(get_u32(b, kSpectrumHeader + 4 * i));
    return f;
}

std::vector<std::uint8_t> encode_audio(const AudioBlock& audio) {
    std::vector<std::uint8_t> b;
    b.reserve(kAudioHeader + 2 * audio.samples.size());
    b.push_back(kAudioTag);
    put_u32(b, static_cast<std::uint32_t>(audio.samples.size()));
    for (double x : audio.samples) {
        const auto u = static_cast<std::uint16_t>(audio_to_pcm16(x));
        b.push_back(static_cast<std::uint8_t>(u & 0xff));
        b.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    return b;
}

AudioBlock decode_audio(std::span<const std::uint8_t> b) {
    if (b.size() < kAudioHeader || b[0] != kAudioTag) throw ProtocolError("not an audio frame");
    const std::uint32_t n = get_u32(b, 1);
    if (b.size() != kAudioHeader + 2ull * n) throw ProtocolError("audio frame length mismatch");
    AudioBlock a;
    a.rate_hz = kAudioRateHz;
    a.samples.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(b[kAudioHeader + 2 * i]) |
                                           static_cast<std::uint16_t>(b[kAudioHeader + 2 * i + 1]) << 8);
        a.samples[i] = pcm16_to_audio(v);
    }
    return a;
}

}  // namespace sdrtk::wire
