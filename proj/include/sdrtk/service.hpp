#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "sdrtk/session.hpp"

namespace sdrtk {

struct ServiceConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 8073;  // 0 picks a free port
    double spectrum_rate_hz = 15.0;
    double status_rate_hz = 4.0;
    std::size_t block_size = 16384;
    std::size_t fft_size = 2048;
    bool realtime = true;                   // pace the source at its sample rate
    std::optional<SourceSpec> default_source;  // used when configure carries no source
    std::size_t spectrum_queue_limit = 8;   // per client; oldest spectrum frames dropped beyond this
};

struct ServiceStats {
    std::uint64_t messages = 0;
    std::uint64_t errors = 0;
    std::uint64_t spectrum_frames = 0;
    std::uint64_t audio_frames = 0;
    std::uint64_t spectrum_dropped = 0;
    std::uint64_t tx_blocks = 0;
    std::size_t clients = 0;
};

/// WebSocket control/streaming service around one Session.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void start();
    void stop();
    std::uint16_t port() const;
    ServiceStats stats() const;
    SessionState state() const;

    /// Apply one control message as if received from a client; returns the error reply, if any.
    std::string handle_text(const std::string& text);  // status on success, error otherwise

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace sdrtk
