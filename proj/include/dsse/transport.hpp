#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dsse/server.hpp"
#include "dsse/wire.hpp"

namespace dsse {

/// Request handler in front of a Server. One request executes at a time;
/// any number of connections may share an endpoint.
class ServerEndpoint {
public:
    explicit ServerEndpoint(Server server) : server_(std::move(server)) {}

    /// Decode a request frame, apply it, encode the reply. Never throws for
    /// malformed or rejected requests; those become ErrorReply frames.
    Bytes handle(ByteView request);

    /// Run fn with exclusive access to the server (instrumentation, adversary switches).
    template <typename Fn>
    decltype(auto) with_server(Fn&& fn) {
        std::lock_guard lock(mutex_);
        return fn(server_);
    }

private:
    wire::Message dispatch(wire::Message request);

    std::mutex mutex_;
    Server server_;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Send one request frame, return the reply frame. Throws TransportError.
    virtual Bytes exchange(ByteView request) = 0;
};

class InProcessTransport final : public Transport {
public:
    explicit InProcessTransport(ServerEndpoint& endpoint) : endpoint_(endpoint) {}
    Bytes exchange(ByteView request) override { return endpoint_.handle(request); }

private:
    ServerEndpoint& endpoint_;
};

/// Client side of a loopback TCP connection; one frame each way per call.
class TcpTransport final : public Transport {
public:
    TcpTransport(const std::string& host, std::uint16_t port);
    ~TcpTransport() override;
    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    Bytes exchange(ByteView request) override;

private:
    int fd_ = -1;
};

/// Accepts TCP connections and serves each on its own thread.
class TcpListener {
public:
    /// Port 0 picks a free port; see port().
    TcpListener(ServerEndpoint& endpoint, const std::string& host, std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    /// Serve on a background thread until stop().
    void start();
    /// Serve on the calling thread until stop() (from another thread).
    void serve();
    void stop();

private:
    void serve_connection(int fd);

    ServerEndpoint& endpoint_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
    std::vector<int> client_fds_;
};

/// Parse "host:port" (host defaults to 127.0.0.1 when only a port is given).
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& spec);

/// Typed protocol client. Error replies become the matching exception:
/// StaleEpochError, NotFoundError or ProtocolError.
class ServerClient {
public:
    explicit ServerClient(Transport& transport) : transport_(transport) {}

    void add(const AddPayload& payload);
    void refresh(const RefreshPayload& payload);
    SearchResult search(const SearchToken& token);
    SignedBloom get_bloom();
    void rotate(const GroupKey& group);

    /// Raw round trip for transparency checks.
    Bytes exchange(ByteView request) { return transport_.exchange(request); }

private:
    wire::Message call(const wire::Message& request, wire::Kind expected);

    Transport& transport_;
};

}  // namespace dsse
