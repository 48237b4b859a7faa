#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdrtk/channel.hpp"
#include "sdrtk/iq_io.hpp"
#include "sdrtk/modulate.hpp"
#include "sdrtk/receiver.hpp"

namespace sdrtk {

enum class SessionState { Idle, Configured, Receiving, Transmitting, ReceivingAndTransmitting };
enum class SessionEvent { Configure, StartRx, StartTx, StopRx, StopTx, StopAll, Retune };

inline constexpr SessionState kAllStates[] = {SessionState::Idle, SessionState::Configured, SessionState::Receiving,
                                              SessionState::Transmitting, SessionState::ReceivingAndTransmitting};
inline constexpr SessionEvent kAllEvents[] = {SessionEvent::Configure, SessionEvent::StartRx, SessionEvent::StartTx,
                                              SessionEvent::StopRx,    SessionEvent::StopTx,  SessionEvent::StopAll,
                                              SessionEvent::Retune};

/// The declared edge set; nullopt means the event is illegal in that state.
std::optional<SessionState> transition(SessionState state, SessionEvent event);

std::string to_string(SessionState s);
std::string to_string(SessionEvent e);
inline bool rx_running(SessionState s) {
    return s == SessionState::Receiving || s == SessionState::ReceivingAndTransmitting;
}
inline bool tx_running(SessionState s) {
    return s == SessionState::Transmitting || s == SessionState::ReceivingAndTransmitting;
}

/// Endless block source for the live loop. Never real hardware.
class BlockSource {
public:
    virtual ~BlockSource() = default;
    virtual IqBlock next(std::size_t n) = 0;
    virtual double sample_rate_hz() const = 0;
    virtual double center_hz() const = 0;
    virtual bool hardware() const { return false; }
};

/// Capture file played in a loop; start_index keeps counting across the wrap.
class CaptureLoopSource : public BlockSource {
public:
    CaptureLoopSource(const std::filesystem::path& raw, const std::filesystem::path& meta);
    IqBlock next(std::size_t n) override;
    double sample_rate_hz() const override { return meta_.sample_rate_hz; }
    double center_hz() const override { return meta_.center_hz; }
    bool hardware() const override { return meta_.hardware; }

private:
    CaptureMeta meta_;
    std::vector<Sample> samples_;
    std::size_t pos_ = 0;
    std::uint64_t index_ = 0;
};

/// Unbounded synthetic scene.
class SceneBlockSource : public BlockSource {
public:
    explicit SceneBlockSource(const SceneSpec& spec);
    IqBlock next(std::size_t n) override;
    double sample_rate_hz() const override { return source_.spec().sample_rate_hz; }
    double center_hz() const override { return source_.spec().center_hz; }

private:
    SceneSource source_;
};

/// In-memory samples played in a loop.
class MemorySource : public BlockSource {
public:
    MemorySource(std::vector<Sample> samples, double sample_rate_hz, double center_hz, bool hardware = false);
    IqBlock next(std::size_t n) override;
    double sample_rate_hz() const override { return rate_; }
    double center_hz() const override { return center_; }
    bool hardware() const override { return hardware_; }

private:
    std::vector<Sample> samples_;
    double rate_, center_;
    bool hardware_;
    std::size_t pos_ = 0;
    std::uint64_t index_ = 0;
};

struct FileSourceSpec {
    std::filesystem::path raw, meta;
};
struct SceneFileSpec {
    std::filesystem::path path;
};
using SourceSpec = std::variant<FileSourceSpec, SceneFileSpec>;
std::unique_ptr<BlockSource> open_source(const SourceSpec& spec);

struct RetuneRequest {
    std::optional<double> offset_hz;
    std::optional<DemodMode> mode;
    std::optional<double> baseband_hz;
    std::optional<double> gain_db;
};

enum class StopWhich { Rx, Tx, All };

struct SessionOptions {
    std::size_t block_size = kDefaultBlockSize;
    std::size_t spectrum_fft = 2048;
    bool estimate_snr = true;
};

struct RxStep {
    RxOutput output;
    TuningParams params;  // the parameter set the whole block was produced under
    std::uint64_t block_index = 0;
};

/// Operator state machine plus the rx/tx chains it drives. All public members are
/// serialized by an internal mutex; rx steps apply pending retunes at their start.
class Session {
public:
    explicit Session(SessionOptions options = {});

    SessionState state() const;
    void configure(const TuningParams& params, std::unique_ptr<BlockSource> source);
    void start_rx();
    void start_tx(const TxConfig& tx);
    void stop(StopWhich which);

    /// Validates immediately (throws and keeps the old parameters on failure); takes
    /// effect at the next block boundary.
    void retune(const RetuneRequest& request);

    /// Pull one block from the source and run the rx chain on it. Receiving states only.
    RxStep step_rx();
    /// Modulate one chunk of audio with the tx chain. Transmitting states only.
    std::vector<Sample> step_tx(std::span<const double> audio);

    TuningParams params() const;          // currently applied
    TuningParams requested_params() const; // including a pending retune
    std::optional<TxConfig> tx_config() const;
    std::optional<double> last_snr_db() const;
    double source_rate_hz() const;

private:
    void require(SessionEvent event) const;
    TuningParams merged(const TuningParams& base, const RetuneRequest& r) const;

    mutable std::mutex mutex_;
    SessionOptions options_;
    SessionState state_ = SessionState::Idle;
    TuningParams params_;
    std::optional<TuningParams> pending_;
    std::unique_ptr<BlockSource> source_;
    std::unique_ptr<RxChain> rx_;
    std::optional<TxConfig> tx_config_;
    std::unique_ptr<Modulator> tx_;
    std::optional<double> last_snr_;
    std::uint64_t rx_blocks_ = 0;
};

/// Receive at one frequency, re-modulate the audio at another (same sample stream).
class Bridge {
public:
    Bridge(const TuningParams& rx, const TxConfig& tx, double input_rate_hz, double input_center_hz);
    IqBlock process(const IqBlock& in);
    const AudioBlock& last_audio() const noexcept { return last_audio_; }

private:
    RxChain rx_;
    Modulator tx_;
    double rate_, center_;
    std::uint64_t out_index_ = 0;
    AudioBlock last_audio_;
};

}  // namespace sdrtk
