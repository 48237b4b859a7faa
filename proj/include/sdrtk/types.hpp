#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sdrtk {

using Sample = std::complex<double>;

// RTL2832U hardware limits.
inline constexpr double kMaxRtlSampleRateHz = 2.4e6;
inline constexpr double kTunerMinHz = 24e6;
inline constexpr double kTunerMaxHz = 1850e6;

inline constexpr double kAudioRateHz = 48000.0;

struct IqBlock {
    std::vector<Sample> samples;
    double sample_rate_hz = 0.0;
    double center_hz = 0.0;
    std::uint64_t start_index = 0;  // samples since stream start
    bool hardware_band = false;     // sourced from (or pretending to be) a real tuner

    std::size_t size() const noexcept { return samples.size(); }
    double duration_s() const noexcept { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

struct AudioBlock {
    std::vector<double> samples;
    double rate_hz = kAudioRateHz;
};

enum class WindowKind { Blackman, BlackmanHarris4, BlackmanHarris7 };

enum class DemodMode { AM, DSB, SSB_USB, SSB_LSB, NFM, WFM };

inline constexpr DemodMode kAllModes[] = {DemodMode::AM,      DemodMode::DSB, DemodMode::SSB_USB,
                                          DemodMode::SSB_LSB, DemodMode::NFM, DemodMode::WFM};
inline constexpr WindowKind kAllWindows[] = {WindowKind::Blackman, WindowKind::BlackmanHarris4,
                                             WindowKind::BlackmanHarris7};

std::string to_string(DemodMode mode);
std::string to_string(WindowKind kind);

// Accepts the canonical names plus short aliases ("usb", "bh4", ...), case-insensitive.
// Throws ValueError on anything else.
DemodMode parse_mode(std::string_view text);
WindowKind parse_window(std::string_view text);

inline bool is_fm(DemodMode m) { return m == DemodMode::NFM || m == DemodMode::WFM; }
inline bool is_ssb(DemodMode m) { return m == DemodMode::SSB_USB || m == DemodMode::SSB_LSB; }

}  // namespace sdrtk
