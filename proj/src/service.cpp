#include "sdrtk/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include "sdrtk/error.hpp"
#include "sdrtk/protocol.hpp"

namespace sdrtk {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

enum class FrameKind { Text, Spectrum, Audio };

struct Outgoing {
    FrameKind kind;
    std::shared_ptr<const std::vector<std::uint8_t>> data;
};

std::shared_ptr<const std::vector<std::uint8_t>> text_bytes(const std::string& s) {
    return std::make_shared<const std::vector<std::uint8_t>>(s.begin(), s.end());
}

}  // namespace

struct Service::Impl {
    class Client;

    explicit Impl(ServiceConfig c) : config(std::move(c)), session(session_options(config)), acceptor(ioc) {}

    static SessionOptions session_options(const ServiceConfig& c) {
        SessionOptions o;
        o.block_size = c.block_size;
        o.spectrum_fft = c.fft_size;
        o.estimate_snr = true;
        return o;
    }

    // Declared first so it is destroyed last.
    net::io_context ioc;
    ServiceConfig config;
    Session session;
    tcp::acceptor acceptor;
    std::unique_ptr<net::steady_timer> status_timer;
    std::uint16_t bound_port = 0;

    std::mutex command_mutex;  // serializes control messages
    std::optional<AudioGenerator> tx_tone;

    mutable std::mutex clients_mutex;
    std::vector<std::weak_ptr<Client>> clients;

    mutable std::mutex stats_mutex;
    ServiceStats stats;

    std::atomic<bool> running{false};
    std::atomic<bool> io_done{false};
    std::thread io_thread;
    std::thread dsp_thread;

    void count(std::uint64_t ServiceStats::*field, std::uint64_t n = 1) {
        std::lock_guard lock(stats_mutex);
        stats.*field += n;
    }

    void do_accept();
    void schedule_status();
    std::string current_status() const;
    std::string handle(const std::string& text);
    void dispatch(const wire::Command& cmd);
    void broadcast(FrameKind kind, std::shared_ptr<const std::vector<std::uint8_t>> data);
    void dsp_loop();
    void add_client(const std::shared_ptr<Client>& c);
};

class Service::Impl::Client : public std::enable_shared_from_this<Client> {
public:
    Client(tcp::socket socket, Impl* owner) : ws_(std::move(socket)), owner_(owner) {}

    void run() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.read_message_max(1 << 20);
        ws_.async_accept(beast::bind_front_handler(&Client::on_accept, shared_from_this()));
    }

    // Thread-safe: hops onto the connection's strand.
    void enqueue(Outgoing out) {
        net::post(ws_.get_executor(), [self = shared_from_this(), out = std::move(out)]() mutable {
            self->push(std::move(out));
        });
    }

    void close() {
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            beast::error_code ec;
            beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
            beast::get_lowest_layer(self->ws_).socket().close(ec);
        });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        owner_->add_client(shared_from_this());
        push({FrameKind::Text, text_bytes(owner_->current_status())});
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&Client::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        std::string reply;
        if (ws_.got_text()) {
            reply = owner_->handle(beast::buffers_to_string(buffer_.data()));
        } else {
            owner_->count(&ServiceStats::messages);
            owner_->count(&ServiceStats::errors);
            reply = wire::error_json("control messages must be text frames");
        }
        buffer_.consume(buffer_.size());
        push({FrameKind::Text, text_bytes(reply)});
        do_read();
    }

    void push(Outgoing out) {
        if (out.kind == FrameKind::Spectrum) {
            if (spectrum_queued_ >= owner_->config.spectrum_queue_limit) {
                // Drop the oldest spectrum frame that is not already on the wire.
                for (auto it = queue_.begin() + (writing_ ? 1 : 0); it != queue_.end(); ++it) {
                    if (it->kind == FrameKind::Spectrum) {
                        queue_.erase(it);
                        --spectrum_queued_;
                        owner_->count(&ServiceStats::spectrum_dropped);
                        break;
                    }
                }
            }
            ++spectrum_queued_;
        }
        queue_.push_back(std::move(out));
        if (!writing_) write_next();
    }

    void write_next() {
        writing_ = true;
        const auto& f = queue_.front();
        ws_.text(f.kind == FrameKind::Text);
        ws_.async_write(net::buffer(*f.data), beast::bind_front_handler(&Client::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (queue_.front().kind == FrameKind::Spectrum) --spectrum_queued_;
        queue_.pop_front();
        if (ec) {
            queue_.clear();
            spectrum_queued_ = 0;
            writing_ = false;
            return;
        }
        if (queue_.empty()) {
            writing_ = false;
        } else {
            write_next();
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    Impl* owner_;
    beast::flat_buffer buffer_;
    std::deque<Outgoing> queue_;
    std::size_t spectrum_queued_ = 0;
    bool writing_ = false;
};

void Service::Impl::add_client(const std::shared_ptr<Client>& c) {
    std::lock_guard lock(clients_mutex);
    clients.erase(std::remove_if(clients.begin(), clients.end(), [](const auto& w) { return w.expired(); }),
                  clients.end());
    clients.push_back(c);
}

void Service::Impl::broadcast(FrameKind kind, std::shared_ptr<const std::vector<std::uint8_t>> data) {
    std::vector<std::shared_ptr<Client>> live;
    {
        std::lock_guard lock(clients_mutex);
        for (const auto& w : clients) {
            if (auto c = w.lock()) live.push_back(std::move(c));
        }
    }
    for (auto& c : live) c->enqueue({kind, data});
}

void Service::Impl::do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<Client>(std::move(socket), this)->run();
        do_accept();
    });
}

std::string Service::Impl::current_status() const {
    wire::Status s;
    s.state = session.state();
    const auto p = session.requested_params();
    s.offset_hz = p.offset_hz;
    s.mode = p.mode;
    s.gain_db = p.gain_db;
    s.center_hz = p.center_hz;
    if (rx_running(s.state)) s.snr_db = session.last_snr_db();
    return wire::status_json(s);
}

void Service::Impl::schedule_status() {
    const auto period = std::chrono::duration<double>(1.0 / config.status_rate_hz);
    status_timer->expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(period));
    status_timer->async_wait([this](beast::error_code ec) {
        if (ec || !running) return;
        broadcast(FrameKind::Text, text_bytes(current_status()));
        schedule_status();
    });
}

void Service::Impl::dispatch(const wire::Command& cmd) {
    if (const auto* c = std::get_if<wire::ConfigureCmd>(&cmd)) {
        TuningParams p;
        p.center_hz = c->center_hz;
        if (c->mode) {
            p.mode = *c->mode;
            p.baseband_hz = DemodConfig::defaults(p.mode).audio_cutoff_hz;
        }
        if (c->offset_hz) p.offset_hz = *c->offset_hz;
        if (c->step_hz) p.step_hz = *c->step_hz;
        if (c->baseband_hz) p.baseband_hz = *c->baseband_hz;
        if (c->gain_db) p.gain_db = *c->gain_db;
        if (c->window) p.window = *c->window;
        if (c->order) p.order = *c->order;
        const auto spec = c->source ? c->source : config.default_source;
        if (!spec) throw ConfigError("configure needs a source (none given and no default)");
        // Reject early so a bad request never opens files for a running session.
        if (!transition(session.state(), SessionEvent::Configure)) {
            throw StateError("configure is not allowed in state " + to_string(session.state()));
        }
        session.configure(p, open_source(*spec));
    } else if (const auto* t = std::get_if<wire::TuneCmd>(&cmd)) {
        session.retune({t->offset_hz, std::nullopt, std::nullopt, std::nullopt});
    } else if (const auto* m = std::get_if<wire::SetModeCmd>(&cmd)) {
        session.retune({std::nullopt, m->mode, m->baseband_hz, std::nullopt});
    } else if (const auto* g = std::get_if<wire::SetGainCmd>(&cmd)) {
        session.retune({std::nullopt, std::nullopt, std::nullopt, g->gain_db});
    } else if (std::holds_alternative<wire::StartRxCmd>(cmd)) {
        session.start_rx();
    } else if (const auto* tx = std::get_if<wire::StartTxCmd>(&cmd)) {
        AudioGenerator tone(ToneAudio{tx->tone_hz, 0.9}, 0);
        session.start_tx(tx->tx);
        tx_tone = std::move(tone);
    } else if (const auto* s = std::get_if<wire::StopCmd>(&cmd)) {
        session.stop(s->which);
    }
}

std::string Service::Impl::handle(const std::string& text) {
    std::lock_guard lock(command_mutex);
    count(&ServiceStats::messages);
    try {
        dispatch(wire::parse_command(text));
        return current_status();
    } catch (const std::exception& e) {
        count(&ServiceStats::errors);
        return wire::error_json(e.what());
    }
}

void Service::Impl::dsp_loop() {
    using clock = std::chrono::steady_clock;
    auto origin = clock::now();
    double stream_s = 0.0;
    double next_spectrum_s = 0.0;
    bool was_active = false;
    const double spectrum_period = 1.0 / config.spectrum_rate_hz;

    while (running) {
        const SessionState st = session.state();
        const bool rx = rx_running(st), tx = tx_running(st);
        if (!rx && !tx) {
            was_active = false;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            continue;
        }
        if (!was_active) {
            origin = clock::now();
            stream_s = 0.0;
            next_spectrum_s = 0.0;
            was_active = true;
        }
        const double rate = session.source_rate_hz();
        const double block_s = static_cast<double>(config.block_size) / rate;
        try {
            if (rx) {
                RxStep step = session.step_rx();
                broadcast(FrameKind::Audio, std::make_shared<const std::vector<std::uint8_t>>(
                                                wire::encode_audio(step.output.audio)));
                count(&ServiceStats::audio_frames);
                if (step.output.spectrum && stream_s + 1e-12 >= next_spectrum_s) {
                    broadcast(FrameKind::Spectrum, std::make_shared<const std::vector<std::uint8_t>>(
                                                       wire::encode_spectrum(*step.output.spectrum)));
                    count(&ServiceStats::spectrum_frames);
                    next_spectrum_s += spectrum_period;
                    if (next_spectrum_s < stream_s) next_spectrum_s = stream_s + spectrum_period;
                }
            }
            if (tx) {
                std::vector<double> audio;
                {
                    std::lock_guard lock(command_mutex);
                    if (tx_tone) {
                        audio = tx_tone->next(static_cast<std::size_t>(std::lround(block_s * kAudioRateHz)));
                    }
                }
                session.step_tx(audio);
                count(&ServiceStats::tx_blocks);
            }
        } catch (const StateError&) {
            continue;  // a stop raced the step; the next loop sees the new state
        } catch (const std::exception& e) {
            broadcast(FrameKind::Text, text_bytes(wire::error_json(e.what())));
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            continue;
        }
        stream_s += block_s;
        if (config.realtime) {
            std::this_thread::sleep_until(origin + std::chrono::duration_cast<clock::duration>(
                                                       std::chrono::duration<double>(stream_s)));
        }
    }
}

// ---------------------------------------------------------------------------------------------

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    const auto& c = impl_->config;
    if (!(c.spectrum_rate_hz > 0.0) || !(c.status_rate_hz > 0.0)) throw ConfigError("service rates must be positive");
    if (c.block_size == 0 || c.fft_size == 0 || c.spectrum_queue_limit == 0) {
        throw ConfigError("service sizes must be positive");
    }
}

Service::~Service() { stop(); }

void Service::start() {
    auto& m = *impl_;
    if (m.running) return;
    beast::error_code ec;
    const auto address = net::ip::make_address(m.config.bind_address, ec);
    if (ec) throw ConfigError("bad bind address '" + m.config.bind_address + "'");
    const tcp::endpoint ep(address, m.config.port);
    m.acceptor.open(ep.protocol(), ec);
    if (!ec) m.acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) m.acceptor.bind(ep, ec);
    if (!ec) m.acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
        m.acceptor.close(ec);
        throw IoError("cannot listen on " + m.config.bind_address + ":" + std::to_string(m.config.port) + ": " +
                      ec.message());
    }
    m.bound_port = m.acceptor.local_endpoint().port();
    m.running = true;
    m.io_done = false;
    m.status_timer = std::make_unique<net::steady_timer>(m.ioc);
    m.do_accept();
    m.schedule_status();
    m.io_thread = std::thread([&m] {
        m.ioc.run();
        m.io_done = true;
    });
    m.dsp_thread = std::thread([&m] { m.dsp_loop(); });
}

void Service::stop() {
    auto& m = *impl_;
    if (!m.running.exchange(false)) return;
    if (m.dsp_thread.joinable()) m.dsp_thread.join();
    net::post(m.ioc, [&m] {
        beast::error_code ec;
        m.acceptor.close(ec);
        if (m.status_timer) m.status_timer->cancel();
        std::lock_guard lock(m.clients_mutex);
        for (auto& w : m.clients) {
            if (auto c = w.lock()) c->close();
        }
    });
    for (int i = 0; i < 200 && !m.io_done; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    m.ioc.stop();
    if (m.io_thread.joinable()) m.io_thread.join();
}

std::uint16_t Service::port() const { return impl_->bound_port; }

ServiceStats Service::stats() const {
    std::lock_guard lock(impl_->stats_mutex);
    ServiceStats s = impl_->stats;
    std::lock_guard lock2(impl_->clients_mutex);
    s.clients = static_cast<std::size_t>(std::count_if(impl_->clients.begin(), impl_->clients.end(),
                                                       [](const auto& w) { return !w.expired(); }));
    return s;
}

SessionState Service::state() const { return impl_->session.state(); }

std::string Service::handle_text(const std::string& text) { return impl_->handle(text); }

}  // namespace sdrtk
