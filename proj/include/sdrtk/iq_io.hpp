#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdrtk/types.hpp"

namespace sdrtk {

inline constexpr const char* kRtlFormatTag = "u8_iq_interleaved";
inline constexpr std::size_t kDefaultBlockSize = 65536;

// RTL-SDR byte codec: I then Q, unsigned 8-bit, value = (b - 127.5) / 127.5.
std::vector<Sample> decode_rtl_bytes(std::span<const std::uint8_t> bytes);
// Clamps each component to [-1, 1], then round(x * 127.5 + 127.5) with ties rounded up.
std::vector<std::uint8_t> encode_rtl_bytes(std::span<const Sample> samples);

struct CaptureMeta {
    double sample_rate_hz = 0.0;
    double center_hz = 0.0;
    double gain_db = 19.0;
    std::string format = kRtlFormatTag;
    bool hardware = false;  // enforce tuner range and the 2.4 MS/s ceiling

    void validate() const;
};

CaptureMeta read_capture_meta(const std::filesystem::path& meta_path);
void write_capture_meta(const CaptureMeta& meta, const std::filesystem::path& meta_path);

// Single-consumer stream of fixed-size blocks over a raw capture.
class CaptureReader {
public:
    CaptureReader(const std::filesystem::path& raw_path, const std::filesystem::path& meta_path,
                  std::size_t block_size = kDefaultBlockSize);

    const CaptureMeta& meta() const noexcept { return meta_; }
    std::size_t block_size() const noexcept { return block_size_; }
    std::uint64_t total_samples() const noexcept { return total_bytes_ / 2; }

    // Next block, or nullopt at end of file. The final block may be short.
    std::optional<IqBlock> next();
    // Restart from the first sample; start_index keeps counting when `continue_index` is set.
    void rewind(bool continue_index = false);

private:
    std::filesystem::path raw_path_;
    CaptureMeta meta_;
    std::size_t block_size_;
    std::ifstream in_;
    std::uint64_t total_bytes_ = 0;
    std::uint64_t bytes_read_ = 0;
    std::uint64_t next_index_ = 0;
};

std::vector<IqBlock> read_capture(const std::filesystem::path& raw_path, const std::filesystem::path& meta_path,
                                  std::size_t block_size = kDefaultBlockSize);

class CaptureWriter {
public:
    CaptureWriter(const std::filesystem::path& raw_path, const std::filesystem::path& meta_path, CaptureMeta meta);
    ~CaptureWriter();
    CaptureWriter(const CaptureWriter&) = delete;
    CaptureWriter& operator=(const CaptureWriter&) = delete;

    void write(std::span<const Sample> samples);
    void close();

private:
    std::ofstream out_;
    std::filesystem::path meta_path_;
    CaptureMeta meta_;
    bool closed_ = false;
};

void write_capture(std::span<const IqBlock> blocks, const std::filesystem::path& raw_path,
                   const std::filesystem::path& meta_path, const CaptureMeta& meta);

// RIFF WAV, PCM-16, mono only.
AudioBlock read_wav(const std::filesystem::path& path);
void write_wav(const AudioBlock& audio, const std::filesystem::path& path);

std::int16_t audio_to_pcm16(double x);
double pcm16_to_audio(std::int16_t v);

}  // namespace sdrtk
