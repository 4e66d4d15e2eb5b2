#pragma once

#include "dxq/transport/transport.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace dxq::transport {

/// What the in-memory network does with one request to a target.
enum class Fault {
    none,
    /// Connection refused: TransportError{connect}.
    unreachable,
    /// The target never answers and the handler does not run:
    /// TransportError{timeout} without waiting.
    silent,
    /// The handler runs but its response is lost: TransportError{timeout}.
    drop_response,
};

/// Decides the fault for each request sent to a target.
using FaultInjector = std::function<Fault(const protocol::Message& request)>;

/// Process-local transport keyed by node identifier. Requests are
/// serialized to bytes and run through the same listener pipeline as TCP,
/// on the caller's thread. A handler that overruns the request timeout
/// yields TransportError{timeout} once it returns.
class MemoryNetwork final : public Transport {
public:
    MemoryNetwork() = default;
    ~MemoryNetwork() override;

    std::unique_ptr<Listener> listen(const protocol::NodeIdentifier& self, Handler handler) override;
    protocol::Message request(const protocol::NodeIdentifier& target, const protocol::Message& m,
                              std::chrono::milliseconds timeout = default_request_timeout) override;
    void set_wire_tap(WireTap tap) override;

    void set_fault(const protocol::NodeIdentifier& target, Fault fault);
    void set_fault_injector(const protocol::NodeIdentifier& target, FaultInjector injector);
    void clear_faults();

    /// Runs the handler of `target` after sleeping for `delay`.
    void set_delay(const protocol::NodeIdentifier& target, std::chrono::milliseconds delay);

private:
    struct Endpoint {
        Handler handler;
    };

    void unlisten(const std::string& key, const std::shared_ptr<Endpoint>& endpoint);
    void tap(std::string_view frame);

    class MemoryListener;

    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Endpoint>> endpoints_;
    std::map<std::string, FaultInjector> faults_;
    std::map<std::string, std::chrono::milliseconds> delays_;
    std::shared_ptr<WireTap> tap_;
    std::mutex tap_mutex_;
};

} // namespace dxq::transport
