#include "diglab/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "diglab/error.hpp"
#include "diglab/protocol.hpp"

namespace diglab {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
namespace code = protocol::error_code;

Catalog load_catalog(const std::string& dir) {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    if (ec) {
        throw IoError("cannot read catalog directory '" + dir + "': " + ec.message());
    }
    std::sort(files.begin(), files.end());
    Catalog catalog;
    for (const auto& file : files) {
        auto spec = std::make_shared<const ArtifactSpec>(load_spec_file(file.string()));
        const std::string name = spec->name;
        if (!catalog.emplace(name, std::move(spec)).second) {
            throw ValidationError("duplicate relic '" + name + "' in " + file.string());
        }
    }
    return catalog;
}

Catalog builtin_catalog() {
    Catalog catalog;
    for (ArtifactSpec& spec : builtin_relics()) {
        std::string name = spec.name;
        catalog.emplace(std::move(name), std::make_shared<const ArtifactSpec>(std::move(spec)));
    }
    return catalog;
}

namespace {

constexpr auto kStatePeriod = std::chrono::milliseconds(100);

class Connection;

}  // namespace

struct DigService::Impl {
    Catalog catalog;
    ServiceOptions options;
    net::io_context ioc;
    std::optional<tcp::acceptor> acceptor;
    std::vector<std::thread> threads;
    std::atomic<std::uint64_t> next_session{1};
    std::uint16_t bound_port = 0;
    bool started = false;

    mutable std::mutex mutex;
    std::vector<std::weak_ptr<Connection>> connections;

    void do_accept();
    void forget_expired() {
        std::erase_if(connections, [](const auto& w) { return w.expired(); });
    }
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, DigService::Impl& service)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), service_(service) {}

    void run() {
        net::dispatch(ws_.get_executor(), [self = shared_from_this()] {
            self->ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            self->ws_.async_accept([self](beast::error_code ec) { self->on_accept(ec); });
        });
    }

    void abort() {
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            beast::error_code ignored;
            beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
            beast::get_lowest_layer(self->ws_).close();
            self->on_closed();
        });
    }

private:
    struct Outbound {
        std::string frame;
        bool mesh = false;  // placeholder for the coalesced mesh delta
    };

    void on_accept(beast::error_code ec) {
        if (ec) {
            on_closed();
            return;
        }
        arm_timer();
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            on_closed();
            return;
        }
        if (!ws_.got_text()) {
            buffer_.consume(buffer_.size());
            bad_frame("binary frames are not accepted");
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        std::optional<protocol::ClientMessage> message;
        try {
            message = protocol::decode_client(text);
        } catch (const Error& e) {
            bad_frame(e.what());
            return;
        }
        handle(*message);
        if (!closing_) {
            do_read();
        }
    }

    void bad_frame(const std::string& why) {
        send_error(code::kBadFrame, why);
        closing_ = true;
        flush();
    }

    double now() const {
        if (!session_) {
            return 0.0;
        }
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    }

    void handle(const protocol::ClientMessage& message) {
        std::visit([this](const auto& body) { on_message(body); }, message.body);
    }

    void on_message(const protocol::CreateSession& m) {
        if (session_) {
            send_error(code::kSessionExists, "this connection already has a session");
            return;
        }
        const auto it = service_.catalog.find(m.relic);
        if (it == service_.catalog.end()) {
            send_error(code::kUnknownRelic, "unknown relic '" + m.relic + "'");
            return;
        }
        try {
            if (m.params) {
                m.params->validate();
            }
            session_ = std::make_unique<Session>(it->second, service_.next_session.fetch_add(1), m.params);
        } catch (const ValidationError& e) {
            send_error(code::kBadParams, e.what());
            return;
        }
        session_id_ = "s" + std::to_string(session_->seed());
        session_->remesh_dirty(service_.options.mesh_workers);
        started_ = std::chrono::steady_clock::now();
        protocol::SessionCreated created;
        created.session_id = session_id_;
        created.artifact_mesh = session_->artifact_mesh();
        created.grid = session_->grid().shape();
        created.tools = session_->spec().tools;
        created.params = session_->params();
        send(std::move(created));
        send_state();
    }

    void on_message(const protocol::ApplyStroke& m) {
        if (!require_running()) {
            return;
        }
        // Client timestamps are advisory; the server clock decides.
        const double t = std::max(now(), session_->clock());
        const std::vector<Event> events = session_->apply_stroke({t, m.stroke.pose});
        std::vector<MeshChunk> changed = session_->remesh_dirty(service_.options.mesh_workers);
        if (subscribed_ && !changed.empty()) {
            queue_mesh(std::move(changed));
        }
        send_events(events);
    }

    void on_message(const protocol::SelectTool& m) {
        if (!require_running()) {
            return;
        }
        try {
            session_->select_tool(m.name);
        } catch (const UnknownToolError& e) {
            send_error(code::kUnknownTool, e.what());
        }
    }

    void on_message(const protocol::SubscribeMesh&) {
        if (!session_) {
            send_error(code::kNoSession, "create a session first");
            return;
        }
        subscribed_ = true;
        queue_mesh(session_->earth_mesh());
    }

    void on_message(const protocol::Ping& m) { send(protocol::Pong{m.t}); }

    bool require_running() {
        if (!session_) {
            send_error(code::kNoSession, "create a session first");
            return false;
        }
        if (!session_->running()) {
            send_error(code::kSessionOver, "the session has ended");
            return false;
        }
        return true;
    }

    void send_events(const std::vector<Event>& events) {
        for (const Event& e : events) {
            send(protocol::EventMessage{e});
        }
        if (!events.empty()) {
            send_state();
        }
    }

    void send_state() {
        const double limit = session_->params().time_limit;
        const double elapsed = session_->running() ? std::max(now(), session_->clock()) : session_->current_report().duration;
        send(protocol::State{session_->health(), std::max(0.0, limit - elapsed), session_->exposure()});
    }

    void send_error(std::string_view error, const std::string& text) {
        send(protocol::ErrorMessage{std::string(error), text});
    }

    template <class Body>
    void send(Body body) {
        protocol::ServerMessage message{now(), std::move(body)};
        queue_.push_back({protocol::encode(message), false});
        flush();
    }

    /// Pending chunks are keyed by coordinate, so a slow reader only ever
    /// receives the newest version of each chunk.
    void queue_mesh(std::vector<MeshChunk> chunks) {
        for (MeshChunk& c : chunks) {
            pending_mesh_.insert_or_assign(c.coord, std::move(c));
        }
        if (!mesh_queued_) {
            mesh_queued_ = true;
            queue_.push_back({{}, true});
        }
        flush();
    }

    void flush() {
        if (writing_ || closed_) {
            return;
        }
        if (queue_.empty()) {
            if (closing_) {
                do_close();
            }
            return;
        }
        Outbound next = std::move(queue_.front());
        queue_.pop_front();
        if (next.mesh) {
            protocol::MeshDelta delta;
            for (auto& [coord, chunk] : pending_mesh_) {
                delta.chunks.push_back(std::move(chunk));
            }
            pending_mesh_.clear();
            mesh_queued_ = false;
            next.frame = protocol::encode(protocol::ServerMessage{now(), std::move(delta)});
        }
        writing_frame_ = std::move(next.frame);
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(writing_frame_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) {
                self->on_closed();
                return;
            }
            self->flush();
        });
    }

    void do_close() {
        ws_.async_close(websocket::close_code::policy_error,
                        [self = shared_from_this()](beast::error_code) { self->on_closed(); });
    }

    void arm_timer() {
        timer_.expires_after(kStatePeriod);
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->closed_) {
                return;
            }
            self->on_timer();
            self->arm_timer();
        });
    }

    void on_timer() {
        if (!session_ || !session_->running() || closing_) {
            return;
        }
        const double t = now();
        if (t >= session_->params().time_limit) {
            send_events(session_->tick(std::max(t, session_->clock())));
        } else {
            send_state();
        }
    }

    void on_closed() {
        if (closed_) {
            return;
        }
        closed_ = true;
        timer_.cancel();
        if (session_ && service_.options.on_session_closed) {
            service_.options.on_session_closed(*session_);
        }
        session_.reset();
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    DigService::Impl& service_;
    beast::flat_buffer buffer_;

    std::unique_ptr<Session> session_;
    std::string session_id_;
    std::chrono::steady_clock::time_point started_;
    bool subscribed_ = false;

    std::deque<Outbound> queue_;
    std::map<Int3, MeshChunk> pending_mesh_;
    bool mesh_queued_ = false;
    std::string writing_frame_;
    bool writing_ = false;
    bool closing_ = false;
    bool closed_ = false;
};

}  // namespace

void DigService::Impl::do_accept() {
    acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            return;
        }
        beast::error_code ignored;
        socket.set_option(tcp::no_delay(true), ignored);
        auto conn = std::make_shared<Connection>(std::move(socket), *this);
        {
            std::lock_guard lock(mutex);
            forget_expired();
            connections.push_back(conn);
        }
        conn->run();
        do_accept();
    });
}

DigService::DigService(Catalog catalog, ServiceOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->catalog = std::move(catalog);
    impl_->options = std::move(options);
}

DigService::~DigService() { stop(); }

void DigService::start() {
    if (impl_->started) {
        return;
    }
    try {
        const tcp::endpoint endpoint(net::ip::make_address(impl_->options.address), impl_->options.port);
        impl_->acceptor.emplace(net::make_strand(impl_->ioc));
        impl_->acceptor->open(endpoint.protocol());
        impl_->acceptor->set_option(net::socket_base::reuse_address(true));
        impl_->acceptor->bind(endpoint);
        impl_->acceptor->listen(net::socket_base::max_listen_connections);
        impl_->bound_port = impl_->acceptor->local_endpoint().port();
    } catch (const boost::system::system_error& e) {
        impl_->acceptor.reset();
        throw Error("cannot listen on " + impl_->options.address + ":" + std::to_string(impl_->options.port) + ": " +
                    e.code().message());
    }
    impl_->started = true;
    impl_->do_accept();
    const unsigned n = std::max(1u, impl_->options.io_threads);
    for (unsigned i = 0; i < n; ++i) {
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    }
}

void DigService::stop() {
    if (!impl_->started) {
        return;
    }
    impl_->started = false;
    net::post(impl_->acceptor->get_executor(), [this] {
        beast::error_code ignored;
        impl_->acceptor->close(ignored);
    });
    {
        std::lock_guard lock(impl_->mutex);
        for (const auto& weak : impl_->connections) {
            if (auto conn = weak.lock()) {
                conn->abort();
            }
        }
        impl_->connections.clear();
    }
    for (std::thread& t : impl_->threads) {
        t.join();
    }
    impl_->threads.clear();
    impl_->acceptor.reset();
    impl_->ioc.restart();
}

std::uint16_t DigService::port() const { return impl_->bound_port; }

std::size_t DigService::connection_count() const {
    std::lock_guard lock(impl_->mutex);
    return static_cast<std::size_t>(std::count_if(impl_->connections.begin(), impl_->connections.end(),
                                                  [](const auto& w) { return !w.expired(); }));
}

}  // namespace diglab
