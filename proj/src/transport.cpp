#include "dsse/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "dsse/errors.hpp"

namespace dsse {

namespace {

using wire::Kind;
using wire::Status;

Kind reply_kind(Kind request) { return static_cast<Kind>(static_cast<std::uint8_t>(request) | 0x80); }

[[noreturn]] void sys_fail(const std::string& what) {
    throw TransportError(what + ": " + std::strerror(errno));
}

void write_all(int fd, ByteView data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            sys_fail("send");
        }
        sent += static_cast<std::size_t>(n);
    }
}

/// false on clean EOF before the first byte.
bool read_exact(int fd, std::uint8_t* out, std::size_t len, bool eof_ok) {
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, out + got, len - got, 0);
        if (n == 0) {
            if (eof_ok && got == 0) return false;
            throw TransportError("connection closed mid-frame");
        }
        if (n < 0) {
            if (errno == EINTR) continue;
            sys_fail("recv");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

/// Read one frame; nullopt on clean EOF. Malformed headers raise FormatError.
std::optional<Bytes> read_frame(int fd) {
    Bytes frame(wire::kFrameHeader);
    if (!read_exact(fd, frame.data(), frame.size(), true)) return std::nullopt;
    const std::uint32_t len = wire::body_length(frame);
    frame.resize(wire::kFrameHeader + len);
    read_exact(fd, frame.data() + wire::kFrameHeader, len, false);
    return frame;
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h = host == "localhost" ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) throw TransportError("bad IPv4 address '" + host + "'");
    return addr;
}

Status status_for(const std::exception& e) {
    if (dynamic_cast<const StaleEpochError*>(&e)) return Status::stale_epoch;
    if (dynamic_cast<const NotFoundError*>(&e)) return Status::not_found;
    if (dynamic_cast<const FormatError*>(&e)) return Status::bad_request;
    if (auto* p = dynamic_cast<const ProtocolError*>(&e)) {
        switch (p->fault()) {
            case ProtocolError::Fault::duplicate_label:
                return Status::duplicate_label;
            case ProtocolError::Fault::non_monotonic:
                return Status::non_monotonic;
            case ProtocolError::Fault::unsupported:
                return Status::unsupported;
            default:
                return Status::protocol;
        }
    }
    if (dynamic_cast<const UsageError*>(&e)) return Status::bad_request;
    return Status::internal;
}

}  // namespace

wire::Message ServerEndpoint::dispatch(wire::Message request) {
    std::lock_guard lock(mutex_);
    return std::visit(
        [&](auto& req) -> wire::Message {
            using T = std::decay_t<decltype(req)>;
            if constexpr (std::is_same_v<T, AddPayload>) {
                server_.add(req);
                return wire::Ack{Kind::add_ack};
            } else if constexpr (std::is_same_v<T, wire::Refresh>) {
                server_.refresh(req.bloom);
                return wire::Ack{Kind::refresh_ack};
            } else if constexpr (std::is_same_v<T, SearchToken>) {
                return server_.search(req);
            } else if constexpr (std::is_same_v<T, wire::GetBloom>) {
                return wire::BloomReply{server_.get_bloom()};
            } else if constexpr (std::is_same_v<T, wire::Rotate>) {
                server_.rotate(req.group);
                return wire::Ack{Kind::rotate_ack};
            } else {
                throw FormatError("response kind sent as a request", 1);
            }
        },
        request);
}

Bytes ServerEndpoint::handle(ByteView request) {
    Kind reply = Kind::search_result;
    try {
        if (request.size() >= 2 && (request[1] & 0x80) == 0 && request[1] >= 0x01 && request[1] <= 0x05)
            reply = reply_kind(static_cast<Kind>(request[1]));
        return wire::encode(dispatch(wire::decode(request)));
    } catch (const std::exception& e) {
        return wire::encode(wire::ErrorReply{reply, status_for(e), e.what()});
    }
}

TcpTransport::TcpTransport(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) sys_fail("socket");
    const sockaddr_in addr = make_addr(host, port);
    if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        const int err = errno;
        ::close(fd_);
        fd_ = -1;
        errno = err;
        sys_fail("connect to " + host + ":" + std::to_string(port));
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpTransport::~TcpTransport() {
    if (fd_ >= 0) ::close(fd_);
}

Bytes TcpTransport::exchange(ByteView request) {
    write_all(fd_, request);
    try {
        auto frame = read_frame(fd_);
        if (!frame) throw TransportError("server closed the connection");
        return std::move(*frame);
    } catch (const FormatError& e) {
        throw TransportError(std::string("malformed reply header: ") + e.what());
    }
}

TcpListener::TcpListener(ServerEndpoint& endpoint, const std::string& host, std::uint16_t port)
    : endpoint_(endpoint) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) sys_fail("socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const sockaddr_in addr = make_addr(host, port);
    if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(listen_fd_);
        sys_fail("bind " + host + ":" + std::to_string(port));
    }
    if (::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        sys_fail("listen");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpListener::start() {
    running_ = true;
    acceptor_ = std::thread([this] { serve(); });
}

void TcpListener::serve() {
    running_ = true;
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;  // listener shut down
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(workers_mutex_);
        client_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpListener::serve_connection(int fd) {
    try {
        while (running_) {
            std::optional<Bytes> request;
            try {
                request = read_frame(fd);
            } catch (const FormatError& e) {
                // Unparseable header: reply once, then drop the connection.
                write_all(fd, wire::encode(wire::ErrorReply{Kind::search_result, Status::bad_request, e.what()}));
                break;
            }
            if (!request) break;
            write_all(fd, endpoint_.handle(*request));
        }
    } catch (const TransportError&) {
    }
    ::shutdown(fd, SHUT_RDWR);
}

void TcpListener::stop() {
    const bool was_running = running_.exchange(false);
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(workers_mutex_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
    std::lock_guard lock(workers_mutex_);
    for (int fd : client_fds_) ::close(fd);
    client_fds_.clear();
    (void)was_running;
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& spec) {
    std::string host = "127.0.0.1";
    std::string port = spec;
    if (auto colon = spec.rfind(':'); colon != std::string::npos) {
        host = spec.substr(0, colon);
        port = spec.substr(colon + 1);
    }
    try {
        const unsigned long p = std::stoul(port);
        if (p > 65535) throw std::out_of_range("port");
        return {host, static_cast<std::uint16_t>(p)};
    } catch (const std::exception&) {
        throw UsageError("bad endpoint '" + spec + "' (expected [host:]port)");
    }
}

wire::Message ServerClient::call(const wire::Message& request, Kind expected) {
    const Bytes reply = transport_.exchange(wire::encode(request));
    wire::Message m;
    try {
        m = wire::decode(reply);
    } catch (const FormatError& e) {
        throw TransportError(std::string("malformed reply: ") + e.what());
    }
    if (auto* err = std::get_if<wire::ErrorReply>(&m)) {
        switch (err->status) {
            case Status::stale_epoch:
                throw StaleEpochError(err->message);
            case Status::not_found:
                throw NotFoundError(err->message);
            case Status::duplicate_label:
                throw ProtocolError(err->message, ProtocolError::Fault::duplicate_label);
            case Status::non_monotonic:
                throw ProtocolError(err->message, ProtocolError::Fault::non_monotonic);
            case Status::unsupported:
                throw ProtocolError(err->message, ProtocolError::Fault::unsupported);
            default:
                throw ProtocolError(std::string(wire::status_name(err->status)) + ": " + err->message);
        }
    }
    if (wire::kind_of(m) != expected) throw ProtocolError("unexpected reply kind");
    return m;
}

void ServerClient::add(const AddPayload& payload) { call(payload, Kind::add_ack); }

void ServerClient::refresh(const RefreshPayload& payload) { call(wire::Refresh{payload}, Kind::refresh_ack); }

SearchResult ServerClient::search(const SearchToken& token) {
    return std::get<SearchResult>(call(token, Kind::search_result));
}

SignedBloom ServerClient::get_bloom() {
    return std::get<wire::BloomReply>(call(wire::GetBloom{}, Kind::bloom)).bloom;
}

void ServerClient::rotate(const GroupKey& group) { call(wire::Rotate{group}, Kind::rotate_ack); }

}  // namespace dsse
