#pragma once

#include "example_exchange.hpp"

#include "dxq/node/client.hpp"
#include "dxq/node/clock.hpp"
#include "dxq/node/executor.hpp"
#include "dxq/node/xdp_node.hpp"
#include "dxq/node/xqd_node.hpp"
#include "dxq/transport/memory.hpp"
#include "dxq/xml/node.hpp"

#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace dxq::testing {

inline protocol::NodeIdentifier id(std::string_view text) { return protocol::NodeIdentifier::parse(text); }
inline protocol::NodeName name(std::string_view text) { return protocol::NodeName::parse(text); }

/// Records every frame crossing a memory network.
class Recorder {
public:
    void attach(transport::Transport& t)
    {
        t.set_wire_tap([this](std::string_view frame) {
            std::lock_guard lock(mutex_);
            frames_.emplace_back(frame);
        });
    }

    std::vector<std::string> frames() const
    {
        std::lock_guard lock(mutex_);
        return frames_;
    }

    void clear()
    {
        std::lock_guard lock(mutex_);
        frames_.clear();
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> frames_;
};

struct XdpSpecForTest {
    std::string identifier;
    std::string name;
    std::string document;
    std::string admin;
};

/// XQD plus XDPs on one memory network, fully deterministic: manual clock,
/// manual executor for user-defined fan-outs, sequential fan-out.
class TestNetwork {
public:
    explicit TestNetwork(std::vector<XdpSpecForTest> xdps, std::string xqd_identifier = std::string(example::xqd),
                         bool manual_executor = true)
    {
        node::XqdConfig cfg;
        cfg.self = id(xqd_identifier);
        cfg.name = name("MetaSearch");
        cfg.admin = "Ops <ops@example>";
        cfg.ping_interval = std::chrono::milliseconds(0);
        cfg.identifier_seed = example::client_seed;
        cfg.parallel_fanout = false;
        node::XqdServices services;
        services.clock = &clock;
        if (manual_executor)
            services.executor = &executor;
        xqd = std::make_unique<node::XqdNode>(cfg, net, services);
        xqd->start();

        for (auto& spec : xdps) {
            node::XdpConfig x;
            x.self = id(spec.identifier);
            x.name = name(spec.name);
            x.xqd = cfg.self;
            x.admin = spec.admin;
            x.document = xml::parse(spec.document);
            x.max_join_attempts = 1;
            x.sign_off_before_unregister = false;
            node::XdpServices xs;
            xs.sleeper = [](std::chrono::milliseconds) { return true; };
            auto node = std::make_unique<node::XdpNode>(x, net, xs);
            node->start_listening();
            this->xdps.push_back(std::move(node));
        }
    }

    ~TestNetwork()
    {
        executor.run_pending();
        xqd->stop();
    }

    static std::vector<XdpSpecForTest> example_xdps()
    {
        return {
            {std::string(example::physnet), std::string(example::physnet_name), std::string(example::document),
             std::string(example::physnet_admin)},
            {std::string(example::mirror), std::string(example::mirror_name), std::string(example::document),
             std::string(example::mirror_admin)},
        };
    }

    void join_all()
    {
        for (auto& x : xdps)
            x->join();
    }

    node::Client client() { return node::Client(net, xqd->config().self); }

    transport::MemoryNetwork net;
    node::ManualClock clock;
    node::ManualExecutor executor;
    std::unique_ptr<node::XqdNode> xqd;
    std::vector<std::unique_ptr<node::XdpNode>> xdps;
};

/// Plays the example exchange and returns every frame on the wire.
inline std::vector<std::string> play_example_exchange()
{
    TestNetwork network(TestNetwork::example_xdps());
    Recorder recorder;
    recorder.attach(network.net);

    network.join_all();
    network.xqd->inquire(id(example::physnet), "Node-Name Admin");
    network.xqd->inquire(id(example::mirror), "Node-Name Admin");

    auto client = network.client();
    node::QueryRequest request{"0", "user-defined", std::string(example::query), std::nullopt,
                               std::string(example::merge_query_on_wire)};
    client.submit(request);
    network.executor.run_pending();
    client.send_merge_algorithm("0", *request.merge_query);

    for (auto& x : network.xdps)
        x->leave();
    return recorder.frames();
}

} // namespace dxq::testing
