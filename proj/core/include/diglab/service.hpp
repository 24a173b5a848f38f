#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "diglab/artifact.hpp"
#include "diglab/session.hpp"

namespace diglab {

using Catalog = std::map<std::string, std::shared_ptr<const ArtifactSpec>, std::less<>>;

/// Every *.json package in `dir`, keyed by relic name. Throws on I/O or invalid packages.
Catalog load_catalog(const std::string& dir);
Catalog builtin_catalog();

struct ServiceOptions {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8765;  ///< 0 picks a free port
    unsigned io_threads = 1;
    unsigned mesh_workers = 1;
    /// Called on the connection's thread when a session is destroyed.
    std::function<void(const Session&)> on_session_closed;
};

/// WebSocket front door. One session per connection; the server clock is
/// authoritative and starts at session creation.
class DigService {
public:
    DigService(Catalog catalog, ServiceOptions options);
    ~DigService();
    DigService(const DigService&) = delete;
    DigService& operator=(const DigService&) = delete;

    /// Binds and starts the I/O threads. Throws Error when the address cannot be bound.
    void start();
    /// Closes the listener and every connection, then joins. Idempotent.
    void stop();
    std::uint16_t port() const;
    std::size_t connection_count() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace diglab
