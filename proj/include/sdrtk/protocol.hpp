#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sdrtk/metrics.hpp"
#include "sdrtk/modulate.hpp"
#include "sdrtk/session.hpp"

namespace sdrtk::wire {

inline constexpr std::uint8_t kSpectrumTag = 0x01;
inline constexpr std::uint8_t kAudioTag = 0x02;

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigureCmd {
    double center_hz = 0.0;
    std::optional<SourceSpec> source;
    // Optional tuning fields; unset ones keep their defaults.
    std::optional<double> offset_hz, step_hz, baseband_hz, gain_db;
    std::optional<DemodMode> mode;
    std::optional<WindowKind> window;
    std::optional<std::size_t> order;
};
struct TuneCmd {
    double offset_hz = 0.0;
};
struct SetModeCmd {
    DemodMode mode = DemodMode::NFM;
    std::optional<double> baseband_hz;
};
struct SetGainCmd {
    double gain_db = 0.0;
};
struct StartRxCmd {};
struct StartTxCmd {
    TxConfig tx;
    double tone_hz = 1000.0;  // audio fed to the tx chain
};
struct StopCmd {
    StopWhich which = StopWhich::All;
};

using Command = std::variant<ConfigureCmd, TuneCmd, SetModeCmd, SetGainCmd, StartRxCmd, StartTxCmd, StopCmd>;

/// Parse one client->server text message. Throws ProtocolError with a readable reason.
Command parse_command(std::string_view text);

struct Status {
    SessionState state = SessionState::Idle;
    double offset_hz = 0.0;
    DemodMode mode = DemodMode::NFM;
    std::optional<double> snr_db;
    double gain_db = 0.0;
    double center_hz = 0.0;
};
std::string status_json(const Status& status);
std::string error_json(std::string_view message);

/// 0x01, u32 bin_count, f64 center_hz, f64 span_hz, bin_count x f32 dB (little-endian).
std::vector<std::uint8_t> encode_spectrum(const SpectrumFrame& frame);
SpectrumFrame decode_spectrum(std::span<const std::uint8_t> bytes);
/// 0x02, u32 sample_count, sample_count x i16 PCM (48 kHz mono, little-endian).
std::vector<std::uint8_t> encode_audio(const AudioBlock& audio);
AudioBlock decode_audio(std::span<const std::uint8_t> bytes);

}  // namespace sdrtk::wire
