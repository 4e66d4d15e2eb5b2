#include "dxq/transport/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <list>
#include <thread>

namespace dxq::transport {

using protocol::Message;
using protocol::NodeIdentifier;
using protocol::ProtocolError;
using Clock = std::chrono::steady_clock;

namespace {

constexpr auto poll_slice = std::chrono::milliseconds(100);

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string errno_text(int err) { return std::strerror(err); }

struct Fd {
    int fd = -1;
    explicit Fd(int f = -1) : fd(f) {}
    Fd(Fd&& o) noexcept : fd(std::exchange(o.fd, -1)) {}
    Fd& operator=(Fd&&) = delete;
    ~Fd()
    {
        if (fd >= 0)
            ::close(fd);
    }
    int release() { return std::exchange(fd, -1); }
};

void set_nonblocking(int fd)
{
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

struct AddrInfo {
    addrinfo* list = nullptr;
    ~AddrInfo()
    {
        if (list)
            ::freeaddrinfo(list);
    }
};

/// Waits for `events` on `fd` until `deadline`; false on timeout.
bool wait_for(int fd, short events, Clock::time_point deadline)
{
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0)
            return false;
        pollfd p{fd, events, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
        if (rc > 0)
            return true;
        if (rc < 0 && errno != EINTR)
            return true;  // let the following syscall report the error
    }
}

/// Writes all of `data`; false when the peer is gone.
bool send_all(int fd, std::string_view data, Clock::time_point deadline, bool& timed_out)
{
    timed_out = false;
    while (!data.empty()) {
        const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n > 0) {
            data.remove_prefix(static_cast<std::size_t>(n));
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
            if (!wait_for(fd, POLLOUT, deadline)) {
                timed_out = true;
                return false;
            }
            continue;
        }
        return false;
    }
    return true;
}

Fd connect_to(const Endpoint& ep, Clock::time_point deadline)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    AddrInfo res;
    const auto port = std::to_string(ep.port);
    if (const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res.list); rc != 0)
        throw TransportError(FailureKind::connect, "cannot resolve " + ep.host + ": " + ::gai_strerror(rc));

    std::string last_error = "no address";
    for (auto* ai = res.list; ai; ai = ai->ai_next) {
        Fd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (fd.fd < 0) {
            last_error = errno_text(errno);
            continue;
        }
        set_nonblocking(fd.fd);
        const int one = 1;
        ::setsockopt(fd.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        if (::connect(fd.fd, ai->ai_addr, ai->ai_addrlen) == 0)
            return fd;
        if (errno != EINPROGRESS) {
            last_error = errno_text(errno);
            continue;
        }
        if (!wait_for(fd.fd, POLLOUT, deadline))
            throw TransportError(FailureKind::connect, "connect to " + ep.to_string() + " timed out");
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd.fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err == 0)
            return fd;
        last_error = errno_text(err);
    }
    throw TransportError(FailureKind::connect, "cannot connect to " + ep.to_string() + ": " + last_error);
}

enum class ReadOutcome { frame, eof, timeout, error };

/// Reads one frame into `out`; `got_bytes` tells whether anything arrived.
ReadOutcome read_one(int fd, FrameAssembler& assembler, Clock::time_point deadline, std::string& out, bool& got_bytes)
{
    char buffer[16 * 1024];
    for (;;) {
        if (auto frame = assembler.next()) {
            out = std::move(*frame);
            return ReadOutcome::frame;
        }
        const auto n = ::recv(fd, buffer, sizeof buffer, 0);
        if (n > 0) {
            got_bytes = true;
            assembler.feed(std::string_view(buffer, static_cast<std::size_t>(n)));
            continue;
        }
        if (n == 0)
            return ReadOutcome::eof;
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
            if (!wait_for(fd, POLLIN, deadline))
                return ReadOutcome::timeout;
            continue;
        }
        return ReadOutcome::error;
    }
}

} // namespace

Endpoint Endpoint::parse(std::string_view url)
{
    const auto sep = url.find("://");
    if (sep == std::string_view::npos || sep == 0)
        throw std::invalid_argument("not a URL: " + std::string(url));
    Endpoint ep;
    ep.scheme = lower(url.substr(0, sep));
    auto rest = url.substr(sep + 3);
    const auto slash = rest.find('/');
    auto authority = rest.substr(0, slash);
    ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    if (const auto at = authority.rfind('@'); at != std::string_view::npos)
        authority.remove_prefix(at + 1);

    std::string_view port_text;
    if (!authority.empty() && authority.front() == '[') {
        const auto close = authority.find(']');
        if (close == std::string_view::npos)
            throw std::invalid_argument("malformed IPv6 host in " + std::string(url));
        ep.host = std::string(authority.substr(1, close - 1));
        auto after = authority.substr(close + 1);
        if (!after.empty()) {
            if (after.front() != ':')
                throw std::invalid_argument("malformed authority in " + std::string(url));
            port_text = after.substr(1);
        }
    } else {
        const auto colon = authority.rfind(':');
        ep.host = std::string(authority.substr(0, colon));
        if (colon != std::string_view::npos)
            port_text = authority.substr(colon + 1);
    }
    if (ep.host.empty())
        throw std::invalid_argument("no host in " + std::string(url));

    if (!port_text.empty()) {
        unsigned value = 0;
        const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535)
            throw std::invalid_argument("invalid port in " + std::string(url));
        ep.port = static_cast<std::uint16_t>(value);
    } else if (ep.scheme == "http") {
        ep.port = 80;
    } else if (ep.scheme == "https") {
        ep.port = 443;
    } else {
        throw std::invalid_argument("no port in " + std::string(url));
    }
    return ep;
}

Endpoint Endpoint::from_identifier(const NodeIdentifier& id)
{
    if (id.empty())
        throw std::invalid_argument("empty identifier has no endpoint");
    auto ep = parse(id.str());
    if (ep.port == 0)
        throw std::invalid_argument("port 0 in " + id.str());
    return ep;
}

std::string Endpoint::to_string() const
{
    const bool v6 = host.find(':') != std::string::npos;
    std::string out = scheme + "://" + (v6 ? "[" + host + "]" : host);
    out += ':' + std::to_string(port);
    out += path.empty() ? "/" : path;
    return out;
}

NodeIdentifier Endpoint::to_identifier() const { return NodeIdentifier::parse(to_string()); }

class TcpTransport::TcpListenerImpl final : public TcpListener {
public:
    TcpListenerImpl(TcpTransport& owner, int fd, std::uint16_t port, NodeIdentifier self, Handler handler)
        : owner_(owner), fd_(fd), port_(port), self_(std::move(self)), handler_(std::move(handler))
    {
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~TcpListenerImpl() override { stop(); }

    void stop() override
    {
        if (stopping_.exchange(true))
            return;
        if (accept_thread_.joinable())
            accept_thread_.join();
        ::close(fd_);
        std::lock_guard lock(conn_mutex_);
        for (auto& c : connections_)
            c.thread.join();
        connections_.clear();
    }

    std::uint16_t port() const override { return port_; }

    void set_identifier(const NodeIdentifier& self) override
    {
        std::lock_guard lock(self_mutex_);
        self_ = self;
    }

private:
    struct Connection {
        std::thread thread;
        std::shared_ptr<std::atomic<bool>> done;
    };

    NodeIdentifier self() const
    {
        std::lock_guard lock(self_mutex_);
        return self_;
    }

    void reap()
    {
        std::lock_guard lock(conn_mutex_);
        for (auto it = connections_.begin(); it != connections_.end();) {
            if (it->done->load()) {
                it->thread.join();
                it = connections_.erase(it);
            } else {
                ++it;
            }
        }
    }

    void accept_loop()
    {
        while (!stopping_.load()) {
            pollfd p{fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, static_cast<int>(poll_slice.count()));
            reap();
            if (rc <= 0)
                continue;
            const int client = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
            if (client < 0)
                continue;
            const int one = 1;
            ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            auto done = std::make_shared<std::atomic<bool>>(false);
            std::lock_guard lock(conn_mutex_);
            connections_.push_back({std::thread([this, client, done] {
                                        serve_channel(client);
                                        done->store(true);
                                    }),
                                    done});
        }
    }

    void serve_channel(int raw)
    {
        Fd fd(raw);
        FrameAssembler assembler(owner_.limits_);
        char buffer[16 * 1024];
        for (;;) {
            std::optional<std::string> frame;
            try {
                frame = assembler.next();
            } catch (const ProtocolError& e) {
                // Unframeable or oversized input: answer once, then hang up.
                const auto reply = protocol::serialize_message(
                    protocol::make_error(self(), NodeIdentifier{}, e.code(), e.what()), {.canonical_order = true});
                owner_.tap(reply);
                bool timed_out = false;
                send_all(fd.fd, reply, Clock::now() + std::chrono::seconds(5), timed_out);
                return;
            }
            if (frame) {
                owner_.tap(*frame);
                const auto served = serve_frame(*frame, self(), handler_);
                owner_.tap(served.response);
                bool timed_out = false;
                if (!send_all(fd.fd, served.response, Clock::now() + std::chrono::seconds(30), timed_out))
                    return;
                if (served.close_channel)
                    return;
                continue;
            }
            if (stopping_.load())
                return;
            pollfd p{fd.fd, POLLIN, 0};
            if (::poll(&p, 1, static_cast<int>(poll_slice.count())) <= 0)
                continue;
            const auto n = ::recv(fd.fd, buffer, sizeof buffer, 0);
            if (n > 0) {
                assembler.feed(std::string_view(buffer, static_cast<std::size_t>(n)));
            } else if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) {
                return;
            }
        }
    }

    TcpTransport& owner_;
    int fd_;
    std::uint16_t port_;
    mutable std::mutex self_mutex_;
    NodeIdentifier self_;
    Handler handler_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex conn_mutex_;
    std::list<Connection> connections_;
};

TcpTransport::TcpTransport(FrameLimits limits) : limits_(limits) {}

TcpTransport::~TcpTransport() { close_idle(); }

std::unique_ptr<Listener> TcpTransport::listen(const NodeIdentifier& self, Handler handler)
{
    Endpoint at;
    try {
        at = Endpoint::from_identifier(self);
    } catch (const std::invalid_argument& e) {
        throw BindError(e.what());
    }
    return listen_at(at, self, std::move(handler));
}

std::unique_ptr<TcpListener> TcpTransport::listen_at(const Endpoint& at, const NodeIdentifier& self, Handler handler)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    AddrInfo res;
    const auto port = std::to_string(at.port);
    const char* host = at.host.empty() || at.host == "*" ? nullptr : at.host.c_str();
    if (const int rc = ::getaddrinfo(host, port.c_str(), &hints, &res.list); rc != 0)
        throw BindError("cannot resolve " + at.host + ": " + ::gai_strerror(rc));

    std::string last_error = "no address";
    for (auto* ai = res.list; ai; ai = ai->ai_next) {
        Fd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (fd.fd < 0) {
            last_error = errno_text(errno);
            continue;
        }
        const int one = 1;
        ::setsockopt(fd.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd.fd, ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(fd.fd, 64) != 0) {
            last_error = errno_text(errno);
            continue;
        }
        sockaddr_storage bound{};
        socklen_t len = sizeof bound;
        ::getsockname(fd.fd, reinterpret_cast<sockaddr*>(&bound), &len);
        const auto actual = bound.ss_family == AF_INET6
                                ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
        return std::make_unique<TcpListenerImpl>(*this, fd.release(), actual, self, std::move(handler));
    }
    throw BindError("cannot listen on " + at.to_string() + ": " + last_error);
}

void TcpTransport::set_wire_tap(WireTap tap)
{
    std::lock_guard lock(tap_mutex_);
    tap_ = tap ? std::make_shared<WireTap>(std::move(tap)) : nullptr;
}

void TcpTransport::tap(std::string_view frame)
{
    std::lock_guard lock(tap_mutex_);
    if (tap_)
        (*tap_)(frame);
}

int TcpTransport::take_idle(const std::string& key)
{
    std::lock_guard lock(pool_mutex_);
    auto it = idle_.find(key);
    if (it == idle_.end() || it->second.empty())
        return -1;
    const int fd = it->second.back();
    it->second.pop_back();
    return fd;
}

void TcpTransport::put_idle(const std::string& key, int fd)
{
    std::lock_guard lock(pool_mutex_);
    idle_[key].push_back(fd);
}

void TcpTransport::close_idle()
{
    std::lock_guard lock(pool_mutex_);
    for (auto& [key, fds] : idle_) {
        for (int fd : fds)
            ::close(fd);
    }
    idle_.clear();
}

Message TcpTransport::request(const NodeIdentifier& target, const Message& m, std::chrono::milliseconds timeout)
{
    Endpoint ep;
    try {
        ep = Endpoint::from_identifier(target);
    } catch (const std::invalid_argument& e) {
        throw TransportError(FailureKind::connect, e.what());
    }
    const auto key = ep.to_string();
    const auto frame = protocol::serialize_message(m, {.canonical_order = true});
    const auto deadline = Clock::now() + timeout;

    for (int attempt = 0; attempt < 2; ++attempt) {
        int cached = take_idle(key);
        const bool reused = cached >= 0;
        Fd fd(reused ? cached : connect_to(ep, deadline).release());

        if (attempt == 0)
            tap(frame);
        bool timed_out = false;
        if (!send_all(fd.fd, frame, deadline, timed_out)) {
            if (timed_out)
                throw TransportError(FailureKind::timeout, "sending to " + key + " timed out");
            if (reused)
                continue;
            throw TransportError(FailureKind::closed, "channel to " + key + " closed while sending");
        }

        FrameAssembler assembler(limits_);
        std::string response;
        bool got_bytes = false;
        ReadOutcome outcome;
        try {
            outcome = read_one(fd.fd, assembler, deadline, response, got_bytes);
        } catch (const ProtocolError& e) {
            throw TransportError(FailureKind::closed, "malformed response from " + key + ": " + e.what());
        }
        switch (outcome) {
        case ReadOutcome::frame:
            break;
        case ReadOutcome::timeout:
            throw TransportError(FailureKind::timeout, "no response from " + key + " within timeout");
        case ReadOutcome::eof:
        case ReadOutcome::error:
            // A pooled channel may have been closed by the peer meanwhile.
            if (reused && !got_bytes)
                continue;
            throw TransportError(FailureKind::closed, "channel to " + key + " closed before a response");
        }

        tap(response);
        Message reply;
        try {
            reply = protocol::parse_message(response);
        } catch (const ProtocolError& e) {
            throw TransportError(FailureKind::closed, "malformed response from " + key + ": " + e.what());
        }
        if (assembler.idle())
            put_idle(key, fd.release());
        return reply;
    }
    throw TransportError(FailureKind::closed, "channel to " + key + " closed");
}

} // namespace dxq::transport
