#include "sdrtk/iq_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <sstream>

#include "json.hpp"

#include "sdrtk/error.hpp"

namespace sdrtk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kHalfScale = 127.5;

std::uint8_t encode_component(double x) {
    x = std::clamp(x, -1.0, 1.0);
    // round-half-up
    const double v = std::floor(x * kHalfScale + kHalfScale + 0.5);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

double decode_component(std::uint8_t b) { return (static_cast<double>(b) - kHalfScale) / kHalfScale; }

}  // namespace

std::vector<Sample> decode_rtl_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 2 != 0) {
        throw FormatError("odd I/Q byte count: I byte at offset " + std::to_string(bytes.size() - 1) +
                          " has no Q byte");
    }
    std::vector<Sample> out(bytes.size() / 2);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = {decode_component(bytes[2 * k]), decode_component(bytes[2 * k + 1])};
    }
    return out;
}

std::vector<std::uint8_t> encode_rtl_bytes(std::span<const Sample> samples) {
    std::vector<std::uint8_t> out(samples.size() * 2);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Sample s = samples[k];
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
            throw ValueError("non-finite sample at index " + std::to_string(k));
        }
        out[2 * k] = encode_component(s.real());
        out[2 * k + 1] = encode_component(s.imag());
    }
    return out;
}

void CaptureMeta::validate() const {
    if (format != kRtlFormatTag) {
        throw ConfigError("unsupported capture format '" + format + "', expected " + kRtlFormatTag);
    }
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
        throw ConfigError("sample_rate_hz must be positive");
    }
    if (!std::isfinite(center_hz) || !std::isfinite(gain_db)) {
        throw ConfigError("center_hz and gain_db must be finite");
    }
    if (hardware) {
        if (sample_rate_hz > kMaxRtlSampleRateHz) {
            throw ConfigError("sample rate " + std::to_string(sample_rate_hz) +
                              " Hz exceeds the RTL2832U ceiling of 2.4 MS/s");
        }
        if (center_hz < kTunerMinHz || center_hz > kTunerMaxHz) {
            throw ConfigError("center " + std::to_string(center_hz) +
                              " Hz outside the R820T tuning range 24-1850 MHz");
        }
    }
}

CaptureMeta read_capture_meta(const fs::path& meta_path) {
    std::ifstream in(meta_path);
    if (!in) throw IoError("cannot open capture metadata " + meta_path.string());
    CaptureMeta meta;
    try {
        const json j = json::parse(in);
        if (!j.is_object()) throw ConfigError("capture metadata must be a JSON object");
        meta.sample_rate_hz = j.at("sample_rate_hz").get<double>();
        meta.center_hz = j.at("center_hz").get<double>();
        meta.gain_db = j.value("gain_db", 19.0);
        meta.format = j.at("format").get<std::string>();
        meta.hardware = j.value("hardware", false);
    } catch (const json::exception& e) {
        throw ConfigError("invalid capture metadata " + meta_path.string() + ": " + e.what());
    }
    meta.validate();
    return meta;
}

void write_capture_meta(const CaptureMeta& meta, const fs::path& meta_path) {
    meta.validate();
    json j = {{"sample_rate_hz", meta.sample_rate_hz},
              {"center_hz", meta.center_hz},
              {"gain_db", meta.gain_db},
              {"format", meta.format}};
    if (meta.hardware) j["hardware"] = true;
    std::ofstream out(meta_path);
    if (!out) throw IoError("cannot write " + meta_path.string());
    out << j.dump() << '\n';
}

CaptureReader::CaptureReader(const fs::path& raw_path, const fs::path& meta_path, std::size_t block_size)
    : raw_path_(raw_path), meta_(read_capture_meta(meta_path)), block_size_(block_size) {
    if (block_size_ == 0) throw ValueError("block size must be positive");
    std::error_code ec;
    total_bytes_ = fs::file_size(raw_path, ec);
    if (ec) throw IoError("cannot stat capture " + raw_path.string() + ": " + ec.message());
    in_.open(raw_path, std::ios::binary);
    if (!in_) throw IoError("cannot open capture " + raw_path.string());
}

std::optional<IqBlock> CaptureReader::next() {
    const std::uint64_t remaining = total_bytes_ - bytes_read_;
    if (remaining == 0) return std::nullopt;
    if (remaining == 1) {
        throw FormatError("truncated capture: lone I byte at offset " + std::to_string(bytes_read_));
    }
    const std::uint64_t want = std::min<std::uint64_t>(remaining - remaining % 2, 2ULL * block_size_);
    std::vector<std::uint8_t> bytes(want);
    in_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(want));
    if (static_cast<std::uint64_t>(in_.gcount()) != want) {
        throw IoError("short read from " + raw_path_.string());
    }
    bytes_read_ += want;
    if (bytes_read_ + 1 == total_bytes_ && want < 2ULL * block_size_) {
        throw FormatError("truncated capture: lone I byte at offset " + std::to_string(bytes_read_));
    }
    IqBlock block;
    block.samples = decode_rtl_bytes(bytes);
    block.sample_rate_hz = meta_.sample_rate_hz;
    block.center_hz = meta_.center_hz;
    block.start_index = next_index_;
    block.hardware_band = meta_.hardware;
    next_index_ += block.samples.size();
    return block;
}

void CaptureReader::rewind(bool continue_index) {
    in_.clear();
    in_.seekg(0);
    bytes_read_ = 0;
    if (!continue_index) next_index_ = 0;
}

std::vector<IqBlock> read_capture(const fs::path& raw_path, const fs::path& meta_path, std::size_t block_size) {
    CaptureReader reader(raw_path, meta_path, block_size);
    std::vector<IqBlock> blocks;
    while (auto b = reader.next()) blocks.push_back(std::move(*b));
    return blocks;
}

CaptureWriter::CaptureWriter(const fs::path& raw_path, const fs::path& meta_path, CaptureMeta meta)
    : meta_path_(meta_path), meta_(std::move(meta)) {
    meta_.validate();
    out_.open(raw_path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write capture " + raw_path.string());
}

CaptureWriter::~CaptureWriter() {
    try {
        close();
    } catch (...) {
    }
}

void CaptureWriter::write(std::span<const Sample> samples) {
    const auto bytes = encode_rtl_bytes(samples);
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out_) throw IoError("write failed");
}

void CaptureWriter::close() {
    if (closed_) return;
    closed_ = true;
    out_.close();
    write_capture_meta(meta_, meta_path_);
}

void write_capture(std::span<const IqBlock> blocks, const fs::path& raw_path, const fs::path& meta_path,
                   const CaptureMeta& meta) {
    CaptureWriter w(raw_path, meta_path, meta);
    for (const auto& b : blocks) w.write(b.samples);
    w.close();
}

// --- WAV ---------------------------------------------------------------------------------

std::int16_t audio_to_pcm16(double x) {
    if (!std::isfinite(x)) throw ValueError("non-finite audio sample");
    const double v = std::round(std::clamp(x, -1.0, 1.0) * 32767.0);
    return static_cast<std::int16_t>(v);
}

double pcm16_to_audio(std::int16_t v) { return static_cast<double>(v) / 32767.0; }

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

}  // namespace

void write_wav(const AudioBlock& audio, const fs::path& path) {
    if (!(audio.rate_hz > 0.0)) throw ValueError("audio rate must be positive");
    const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(audio.rate_hz));
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
    std::vector<std::uint8_t> b;
    b.reserve(44 + data_bytes);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    put_u32(b, 36 + data_bytes);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(b, 16);
    put_u16(b, 1);  // PCM
    put_u16(b, 1);  // mono
    put_u32(b, rate);
    put_u32(b, rate * 2);
    put_u16(b, 2);
    put_u16(b, 16);
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    put_u32(b, data_bytes);
    for (double x : audio.samples) put_u16(b, static_cast<std::uint16_t>(audio_to_pcm16(x)));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

AudioBlock read_wav(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
        throw FormatError(path.string() + " is not a RIFF/WAVE file");
    }
    std::size_t pos = 12;
    bool have_fmt = false;
    std::uint32_t rate = 0;
    AudioBlock audio;
    while (pos + 8 <= b.size()) {
        const std::uint8_t* chunk = b.data() + pos;
        const std::uint32_t len = get_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + len > b.size()) throw FormatError("truncated WAV chunk in " + path.string());
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (len < 16) throw FormatError("short fmt chunk");
            const std::uint16_t encoding = get_u16(b.data() + body);
            const std::uint16_t channels = get_u16(b.data() + body + 2);
            rate = get_u32(b.data() + body + 4);
            const std::uint16_t bits = get_u16(b.data() + body + 14);
            if (encoding != 1 || bits != 16) {
                throw FormatError("unsupported WAV encoding (need PCM-16), got format " + std::to_string(encoding) +
                                  " with " + std::to_string(bits) + " bits");
            }
            if (channels != 1) {
                throw FormatError("unsupported WAV layout: " + std::to_string(channels) + " channels, need mono");
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("WAV data chunk before fmt chunk");
            audio.samples.resize(len / 2);
            for (std::size_t k = 0; k < audio.samples.size(); ++k) {
                audio.samples[k] = pcm16_to_audio(static_cast<std::int16_t>(get_u16(b.data() + body + 2 * k)));
            }
            audio.rate_hz = rate;
            return audio;
        }
        pos = body + len + (len & 1);
    }
    throw FormatError("WAV file " + path.string() + " has no data chunk");
}

}  // namespace sdrtk
