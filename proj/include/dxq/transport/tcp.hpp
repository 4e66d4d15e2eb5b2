#pragma once

#include "dxq/transport/framing.hpp"
#include "dxq/transport/transport.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

namespace dxq::transport {

/// Network location of a node, taken from its identifier URL
/// (`scheme://host:port/path`). `dxqp` requires an explicit port; `http`
/// and `https` default to 80 and 443.
struct Endpoint {
    std::string scheme = "dxqp";
    std::string host;
    std::uint16_t port = 0;
    std::string path = "/";

    /// Throws std::invalid_argument when no host/port can be derived.
    static Endpoint from_identifier(const protocol::NodeIdentifier& id);
    static Endpoint parse(std::string_view url);

    protocol::NodeIdentifier to_identifier() const;
    std::string to_string() const;

    bool operator==(const Endpoint&) const = default;
};

/// Listening socket bound to a TCP endpoint.
class TcpListener : public Listener {
public:
    /// Actual port, useful after binding port 0.
    virtual std::uint16_t port() const = 0;

    /// Identifier used as Msg-From in replies to unparseable input.
    virtual void set_identifier(const protocol::NodeIdentifier& self) = 0;
};

/// Raw DXQP frames over TCP. Outbound channels are cached per target and
/// reused for later requests.
class TcpTransport final : public Transport {
public:
    explicit TcpTransport(FrameLimits limits = {});
    ~TcpTransport() override;

    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    std::unique_ptr<Listener> listen(const protocol::NodeIdentifier& self, Handler handler) override;

    /// Binds `at` (which may differ from the advertised identifier, e.g.
    /// 0.0.0.0 or port 0).
    std::unique_ptr<TcpListener> listen_at(const Endpoint& at, const protocol::NodeIdentifier& self, Handler handler);

    protocol::Message request(const protocol::NodeIdentifier& target, const protocol::Message& m,
                              std::chrono::milliseconds timeout = default_request_timeout) override;
    void set_wire_tap(WireTap tap) override;

    /// Closes all cached outbound channels.
    void close_idle();

private:
    class TcpListenerImpl;

    int take_idle(const std::string& key);
    void put_idle(const std::string& key, int fd);
    void tap(std::string_view frame);

    FrameLimits limits_;
    std::mutex pool_mutex_;
    std::map<std::string, std::vector<int>> idle_;
    std::mutex tap_mutex_;
    std::shared_ptr<WireTap> tap_;
};

} // namespace dxq::transport
