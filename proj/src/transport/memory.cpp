#include "dxq/transport/memory.hpp"

#include <thread>

namespace dxq::transport {

using protocol::Message;
using protocol::NodeIdentifier;

class MemoryNetwork::MemoryListener final : public Listener {
public:
    MemoryListener(MemoryNetwork& network, std::string key, std::shared_ptr<Endpoint> endpoint)
        : network_(network), key_(std::move(key)), endpoint_(std::move(endpoint)) {}

    ~MemoryListener() override { stop(); }

    void stop() override
    {
        if (endpoint_) {
            network_.unlisten(key_, endpoint_);
            endpoint_.reset();
        }
    }

private:
    MemoryNetwork& network_;
    std::string key_;
    std::shared_ptr<Endpoint> endpoint_;
};

MemoryNetwork::~MemoryNetwork() = default;

std::unique_ptr<Listener> MemoryNetwork::listen(const NodeIdentifier& self, Handler handler)
{
    if (self.empty())
        throw BindError("cannot listen on the empty identifier");
    auto endpoint = std::make_shared<Endpoint>(Endpoint{std::move(handler)});
    std::lock_guard lock(mutex_);
    if (!endpoints_.emplace(self.str(), endpoint).second)
        throw BindError("address already in use: " + self.str());
    return std::make_unique<MemoryListener>(*this, self.str(), std::move(endpoint));
}

void MemoryNetwork::unlisten(const std::string& key, const std::shared_ptr<Endpoint>& endpoint)
{
    std::lock_guard lock(mutex_);
    auto it = endpoints_.find(key);
    if (it != endpoints_.end() && it->second == endpoint)
        endpoints_.erase(it);
}

void MemoryNetwork::set_wire_tap(WireTap tap)
{
    std::lock_guard lock(tap_mutex_);
    tap_ = tap ? std::make_shared<WireTap>(std::move(tap)) : nullptr;
}

void MemoryNetwork::tap(std::string_view frame)
{
    std::lock_guard lock(tap_mutex_);
    if (tap_)
        (*tap_)(frame);
}

void MemoryNetwork::set_fault(const NodeIdentifier& target, Fault fault)
{
    set_fault_injector(target, [fault](const Message&) { return fault; });
}

void MemoryNetwork::set_fault_injector(const NodeIdentifier& target, FaultInjector injector)
{
    std::lock_guard lock(mutex_);
    if (injector)
        faults_[target.str()] = std::move(injector);
    else
        faults_.erase(target.str());
}

void MemoryNetwork::set_delay(const NodeIdentifier& target, std::chrono::milliseconds delay)
{
    std::lock_guard lock(mutex_);
    delays_[target.str()] = delay;
}

void MemoryNetwork::clear_faults()
{
    std::lock_guard lock(mutex_);
    faults_.clear();
    delays_.clear();
}

Message MemoryNetwork::request(const NodeIdentifier& target, const Message& m, std::chrono::milliseconds timeout)
{
    const auto started = std::chrono::steady_clock::now();

    std::shared_ptr<Endpoint> endpoint;
    FaultInjector injector;
    std::chrono::milliseconds delay{0};
    {
        std::lock_guard lock(mutex_);
        if (auto it = endpoints_.find(target.str()); it != endpoints_.end())
            endpoint = it->second;
        if (auto it = faults_.find(target.str()); it != faults_.end())
            injector = it->second;
        if (auto it = delays_.find(target.str()); it != delays_.end())
            delay = it->second;
    }

    const Fault fault = injector ? injector(m) : Fault::none;
    if (!endpoint || fault == Fault::unreachable)
        throw TransportError(FailureKind::connect, "connection refused: " + target.str());

    const auto frame = protocol::serialize_message(m, {.canonical_order = true});
    tap(frame);

    if (fault == Fault::silent)
        throw TransportError(FailureKind::timeout, "no response from " + target.str());
    if (delay.count() > 0)
        std::this_thread::sleep_for(delay);

    const auto served = serve_frame(frame, target, endpoint->handler);
    if (fault == Fault::drop_response)
        throw TransportError(FailureKind::timeout, "response from " + target.str() + " lost");
    if (std::chrono::steady_clock::now() - started > timeout)
        throw TransportError(FailureKind::timeout, "request to " + target.str() + " timed out");

    tap(served.response);
    try {
        return protocol::parse_message(served.response);
    } catch (const protocol::ProtocolError& e) {
        throw TransportError(FailureKind::closed, std::string("malformed response: ") + e.what());
    }
}

} // namespace dxq::transport
