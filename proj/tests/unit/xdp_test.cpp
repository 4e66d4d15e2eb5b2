#include "network.hpp"

#include "dxq/node/xdp_node.hpp"

#include <gtest/gtest.h>

using namespace dxq::node;
using namespace dxq::protocol;
using dxq::testing::id;
using dxq::testing::name;
namespace example = dxq::testing::example;

namespace {

const auto xqd_id = id("http://xqd.example/");
const auto xdp_id = id("http://xdp.example/");
const auto client_id = id("http://client.example/");

XdpConfig base_config()
{
    XdpConfig c;
    c.self = xdp_id;
    c.name = name("Provider");
    c.xqd = xqd_id;
    c.admin = "Admin <a@example>";
    c.document = dxq::xml::parse(example::document);
    c.max_join_attempts = 3;
    return c;
}

Message query(std::string_view text, std::string txn = "7")
{
    Message m(MessageType::xml_query, xqd_id, xdp_id);
    m.set(header::transaction_id, std::move(txn));
    m.set_body(std::string(text));
    return m;
}

// A scripted XQD that records which message types reached it.
struct FakeXqd {
    dxq::transport::MemoryNetwork& net;
    std::vector<MessageType> seen;
    bool registered = false;
    bool in_dl = false;
    std::unique_ptr<dxq::transport::Listener> listener;

    explicit FakeXqd(dxq::transport::MemoryNetwork& n) : net(n)
    {
        listener = net.listen(xqd_id, [this](const Message& m) { return handle(m); });
    }

    Message handle(const Message& m)
    {
        seen.push_back(m.type);
        Message ok(MessageType::ok, xqd_id, m.from());
        switch (m.type) {
        case MessageType::register_node: registered = true; return ok;
        case MessageType::unregister_node: registered = in_dl = false; return ok;
        case MessageType::add_to_dl: in_dl = registered; return ok;
        case MessageType::rm_from_dl: in_dl = false; return ok;
        case MessageType::info_request: {
            Message r(MessageType::info_reply, xqd_id, m.from());
            r.set("Registered", registered ? "yes" : "no");
            r.set("Is-in-DL", in_dl ? "yes" : "no");
            return r;
        }
        default: return make_error(xqd_id, m.from(), error_code::unexpected_message);
        }
    }
};

std::vector<std::chrono::milliseconds> sleeps;

XdpServices recording_services()
{
    sleeps.clear();
    XdpServices s;
    s.sleeper = [](std::chrono::milliseconds d) {
        sleeps.push_back(d);
        return true;
    };
    return s;
}

} // namespace

TEST(XdpHandleTest, AnswersQueryWithResult)
{
    dxq::transport::MemoryNetwork net;
    XdpNode node(base_config(), net);
    auto reply = node.handle(query(example::query));
    EXPECT_EQ(reply.type, MessageType::xml_query_result);
    EXPECT_EQ(reply.get(header::transaction_id), "7");
    EXPECT_EQ(*reply.body, "<a>5</a>");
    EXPECT_EQ(reply.to(), xqd_id);
    EXPECT_EQ(reply.from(), xdp_id);
}

TEST(XdpHandleTest, RejectsBadQueries)
{
    dxq::transport::MemoryNetwork net;
    XdpNode node(base_config(), net);

    auto m = query(example::query);
    m.erase(header::transaction_id);
    auto reply = node.handle(m);
    EXPECT_EQ(error_code_of(reply), error_code::missing_header);
    EXPECT_EQ(*reply.body, "Transaction-ID");

    m = query(example::query);
    m.body.reset();
    m.erase(header::content_length);
    EXPECT_EQ(error_code_of(node.handle(m)), error_code::missing_content);

    reply = node.handle(query("let $a := ./a return $b"));
    EXPECT_EQ(error_code_of(reply), error_code::query_processor);
    EXPECT_EQ(*reply.body, "unbound variable $b");
    EXPECT_FALSE(reply.has(header::transaction_id));

    EXPECT_EQ(error_code_of(node.handle(Message(MessageType::register_node, client_id, xdp_id))),
              error_code::unexpected_message);
}

TEST(XdpHandleTest, PolicyRefusesWith901)
{
    dxq::transport::MemoryNetwork net;
    XdpServices s;
    s.policy = [](const Message& m) -> std::optional<std::string> {
        if (m.body && m.body->find("sum") != std::string::npos)
            return "aggregates are not allowed";
        return std::nullopt;
    };
    XdpNode node(base_config(), net, s);
    auto reply = node.handle(query("sum(./a)"));
    EXPECT_EQ(error_code_of(reply), error_code::query_refused);
    EXPECT_EQ(*reply.body, "aggregates are not allowed");
    EXPECT_EQ(node.handle(query("./a")).type, MessageType::xml_query_result);
}

TEST(XdpHandleTest, InfoReply)
{
    dxq::transport::MemoryNetwork net;
    XdpNode node(base_config(), net);
    Message m(MessageType::info_request, client_id, xdp_id);
    m.set(header::request, "*");
    auto reply = node.handle(m);
    EXPECT_EQ(reply.type, MessageType::info_reply);
    EXPECT_EQ(reply.get("Node-Name"), "Provider");
    EXPECT_EQ(reply.get("Admin"), "Admin <a@example>");
    EXPECT_EQ(reply.get("Active-Queries"), "");

    m.set(header::request, "Node-Name Msg-From Unknown-Thing Registered");
    reply = node.handle(m);
    EXPECT_EQ(reply.get("Node-Name"), "Provider");
    EXPECT_EQ(reply.get("Unknown-Thing"), "");
    EXPECT_EQ(reply.get("Registered"), "no");
    EXPECT_EQ(reply.from(), xdp_id);

    m.set(header::request, "");
    EXPECT_EQ(node.handle(m).type, MessageType::info_reply);
    node.start_listening();
    m.erase(header::request);
    reply = net.request(xdp_id, m);
    EXPECT_EQ(error_code_of(reply), error_code::missing_header);
    EXPECT_EQ(*reply.body, "Request");
}

TEST(XdpLifecycleTest, JoinAndLeaveWithSignOff)
{
    dxq::transport::MemoryNetwork net;
    FakeXqd xqd(net);
    XdpNode node(base_config(), net, recording_services());
    auto joined = node.join();
    EXPECT_EQ(joined.phase, XdpPhase::in_distribution_list);
    EXPECT_EQ(joined.attempts, 1);
    auto left = node.leave();
    EXPECT_TRUE(left.ok);
    EXPECT_EQ(node.phase(), XdpPhase::unregistered);
    EXPECT_EQ(xqd.seen, (std::vector<MessageType>{MessageType::register_node, MessageType::add_to_dl,
                                                  MessageType::rm_from_dl, MessageType::unregister_node}));
    EXPECT_FALSE(node.leave().ok);
}

TEST(XdpLifecycleTest, BacksOffWhileXqdUnreachable)
{
    dxq::transport::MemoryNetwork net;
    auto cfg = base_config();
    cfg.max_join_attempts = 5;
    cfg.backoff_max = std::chrono::milliseconds(4'000);
    XdpNode node(cfg, net, recording_services());
    auto joined = node.join();
    EXPECT_EQ(joined.phase, XdpPhase::unregistered);
    EXPECT_EQ(joined.attempts, 5);
    using ms = std::chrono::milliseconds;
    EXPECT_EQ(sleeps, (std::vector<ms>{ms(1'000), ms(2'000), ms(4'000), ms(4'000)}));
}

TEST(XdpLifecycleTest, LostAddToDlReplyIsReconciled)
{
    dxq::transport::MemoryNetwork net;
    FakeXqd xqd(net);
    bool dropped = false;
    net.set_fault_injector(xqd_id, [&](const Message& m) {
        if (m.type == MessageType::add_to_dl && !dropped) {
            dropped = true;
            return dxq::transport::Fault::drop_response;
        }
        return dxq::transport::Fault::none;
    });
    XdpNode node(base_config(), net, recording_services());
    auto joined = node.join();
    EXPECT_EQ(joined.phase, XdpPhase::in_distribution_list);
    EXPECT_TRUE(sleeps.empty());
    EXPECT_EQ(xqd.seen.back(), MessageType::info_request);
}

TEST(XdpLifecycleTest, ErrorReplyStopsJoin)
{
    dxq::transport::MemoryNetwork net;
    auto l = net.listen(xqd_id, [](const Message& m) { return make_error(xqd_id, m.from(), error_code::invalid_message); });
    XdpNode node(base_config(), net, recording_services());
    auto joined = node.join();
    EXPECT_EQ(joined.error, error_code::invalid_message);
    EXPECT_EQ(joined.attempts, 1);
    EXPECT_TRUE(sleeps.empty());
}

TEST(XdpLifecycleTest, SelfCheckRejoinsAfterBeingDropped)
{
    dxq::transport::MemoryNetwork net;
    FakeXqd xqd(net);
    XdpNode node(base_config(), net, recording_services());
    node.join();
    xqd.registered = xqd.in_dl = false;
    auto check = node.self_check();
    EXPECT_EQ(check.observed, XdpPhase::unregistered);
    EXPECT_TRUE(check.rejoined);
    EXPECT_TRUE(xqd.in_dl);

    node.leave();
    xqd.seen.clear();
    check = node.self_check();
    EXPECT_FALSE(check.rejoined);
    EXPECT_EQ(xqd.seen, std::vector<MessageType>{MessageType::info_request});
}

TEST(XdpLifecycleTest, LeaveReconcilesWhenUnregisterFails)
{
    dxq::transport::MemoryNetwork net;
    FakeXqd xqd(net);
    XdpNode node(base_config(), net, recording_services());
    node.join();
    net.set_fault_injector(xqd_id, [](const Message& m) {
        return m.type == MessageType::unregister_node ? dxq::transport::Fault::drop_response : dxq::transport::Fault::none;
    });
    auto left = node.leave();
    EXPECT_TRUE(left.reconciled);
    EXPECT_TRUE(left.ok);
    EXPECT_EQ(left.phase, XdpPhase::unregistered);
}
