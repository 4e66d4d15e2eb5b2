#pragma once

#include "dxq/protocol/message.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dxq::transport {

inline constexpr std::chrono::milliseconds default_request_timeout{10'000};

enum class FailureKind { connect, timeout, closed };

std::string_view to_string(FailureKind kind);

/// No response could be obtained from the target.
class TransportError : public std::runtime_error {
public:
    TransportError(FailureKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    FailureKind kind() const { return kind_; }

private:
    FailureKind kind_;
};

/// The listening endpoint could not be bound.
class BindError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Request handler of a node. Must be safe to call concurrently.
using Handler = std::function<protocol::Message(const protocol::Message&)>;

/// Observer for raw frames, e.g. for wire dumps.
using WireTap = std::function<void(std::string_view frame)>;

/// Stops accepting requests when destroyed.
class Listener {
public:
    virtual ~Listener() = default;
    virtual void stop() = 0;
};

/// Request/response exchange between DXQ-Nodes. A channel carries one
/// exchange at a time; concurrency uses multiple channels.
class Transport {
public:
    virtual ~Transport() = default;

    /// Serves `handler` at `self`. Throws BindError.
    virtual std::unique_ptr<Listener> listen(const protocol::NodeIdentifier& self, Handler handler) = 0;

    /// Sends `m` to `target` and returns the single response. Throws
    /// TransportError.
    virtual protocol::Message request(const protocol::NodeIdentifier& target, const protocol::Message& m,
                                      std::chrono::milliseconds timeout = default_request_timeout) = 0;

    /// Every frame this transport sends or receives is passed to `tap`.
    virtual void set_wire_tap(WireTap tap) = 0;
};

struct ServedFrame {
    std::string response;
    bool close_channel = false;
};

/// Listener-side processing of one inbound frame: parse, check the version,
/// run the handler and serialize the reply in canonical header order.
/// Unparseable frames are answered with ERROR from `self` and mark the
/// channel for closing.
ServedFrame serve_frame(std::string_view frame, const protocol::NodeIdentifier& self, const Handler& handler);

/// ERROR reply for a frame that could not be parsed; addressed to the
/// frame's Msg-From when that can be recovered, else to the empty
/// identifier.
protocol::Message reply_to_unparseable(std::string_view frame, const protocol::NodeIdentifier& self,
                                       const protocol::ProtocolError& error);

} // namespace dxq::transport
