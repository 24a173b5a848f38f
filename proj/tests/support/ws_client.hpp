// Minimal blocking WebSocket client for driving the service in tests.
#pragma once

#include <sys/socket.h>
#include <sys/time.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <optional>
#include <string>

#include "diglab/protocol.hpp"

namespace wsclient {

namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Client {
public:
    explicit Client(std::uint16_t port, std::chrono::milliseconds timeout = std::chrono::seconds(10))
        : ws_(ioc_) {
        tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.next_layer().set_option(tcp::no_delay(true));
        set_timeout(timeout);
        ws_.handshake("127.0.0.1", "/");
    }

    void set_timeout(std::chrono::milliseconds t) {
        timeval tv{};
        tv.tv_sec = static_cast<time_t>(t.count() / 1000);
        tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
        ::setsockopt(ws_.next_layer().native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    }

    void send_text(const std::string& frame) {
        ws_.text(true);
        ws_.write(net::buffer(frame));
    }

    void send(const diglab::protocol::ClientMessage& m) { send_text(diglab::protocol::encode(m)); }

    template <class Body>
    void send(Body body) {
        send(diglab::protocol::ClientMessage{0.0, std::move(body)});
    }

    /// Next raw text frame; nullopt when the peer closed or the read timed out.
    std::optional<std::string> recv_text() {
        beast::flat_buffer buf;
        beast::error_code ec;
        ws_.read(buf, ec);
        if (ec) {
            last_error_ = ec;
            return std::nullopt;
        }
        return beast::buffers_to_string(buf.data());
    }

    std::optional<diglab::protocol::ServerMessage> recv() {
        auto text = recv_text();
        if (!text) {
            return std::nullopt;
        }
        return diglab::protocol::decode_server(*text);
    }

    /// Next message of type T, skipping periodic STATE frames and anything else.
    template <class T>
    std::optional<T> recv_until() {
        while (auto m = recv()) {
            if (auto* body = std::get_if<T>(&m->body)) {
                return *body;
            }
        }
        return std::nullopt;
    }

    /// Next message that is not a STATE frame.
    std::optional<diglab::protocol::ServerMessage> recv_non_state() {
        while (auto m = recv()) {
            if (!std::holds_alternative<diglab::protocol::State>(m->body)) {
                return m;
            }
        }
        return std::nullopt;
    }

    bool closed_by_peer() const { return last_error_ == beast::websocket::error::closed; }
    const beast::error_code& last_error() const { return last_error_; }

private:
    net::io_context ioc_;
    beast::websocket::stream<tcp::socket> ws_;
    beast::error_code last_error_;
};

}  // namespace wsclient
