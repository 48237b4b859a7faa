#pragma once

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace testing_support {

// Blocking websocket client with a background reader that queues every frame.
class WsClient {
public:
    struct Frame {
        bool text = false;
        std::vector<std::uint8_t> data;
        std::chrono::steady_clock::time_point at;
        std::string str() const { return {data.begin(), data.end()}; }
    };

    WsClient(const std::string& host, std::uint16_t port) : ws_(ioc_) {
        namespace net = boost::asio;
        net::ip::tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve(host, std::to_string(port)));
        ws_.handshake(host, "/");
        reader_ = std::thread([this] { read_loop(); });
    }

    ~WsClient() {
        boost::beast::error_code ec;
        ws_.next_layer().shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
        ws_.next_layer().close(ec);
        if (reader_.joinable()) reader_.join();
    }

    void send_text(const std::string& s) {
        std::lock_guard lock(write_mutex_);
        ws_.text(true);
        ws_.write(boost::asio::buffer(s));
    }

    void send_binary(const std::vector<std::uint8_t>& b) {
        std::lock_guard lock(write_mutex_);
        ws_.binary(true);
        ws_.write(boost::asio::buffer(b));
    }

    // Removes and returns the first queued frame matching pred, waiting up to timeout.
    std::optional<Frame> wait_for(const std::function<bool(const Frame&)>& pred, std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex_);
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            for (auto it = frames_.begin(); it != frames_.end(); ++it) {
                if (pred(*it)) {
                    Frame f = std::move(*it);
                    frames_.erase(it);
                    return f;
                }
            }
            if (closed_) return std::nullopt;
            if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
                for (auto it = frames_.begin(); it != frames_.end(); ++it) {
                    if (pred(*it)) {
                        Frame f = std::move(*it);
                        frames_.erase(it);
                        return f;
                    }
                }
                return std::nullopt;
            }
        }
    }

    void clear() {
        std::lock_guard lock(mutex_);
        frames_.clear();
    }

    bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }

private:
    void read_loop() {
        for (;;) {
            boost::beast::flat_buffer buf;
            boost::beast::error_code ec;
            ws_.read(buf, ec);
            std::lock_guard lock(mutex_);
            if (ec) {
                closed_ = true;
                cv_.notify_all();
                return;
            }
            Frame f;
            f.text = ws_.got_text();
            const auto* p = static_cast<const std::uint8_t*>(buf.data().data());
            f.data.assign(p, p + buf.size());
            f.at = std::chrono::steady_clock::now();
            frames_.push_back(std::move(f));
            cv_.notify_all();
        }
    }

    boost::asio::io_context ioc_;
    boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
    std::thread reader_;
    std::mutex write_mutex_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Frame> frames_;
    bool closed_ = false;
};

}  // namespace testing_support
