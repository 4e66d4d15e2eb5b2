#pragma once

#include "dxq/protocol/message.hpp"
#include "dxq/query/query.hpp"
#include "dxq/transport/transport.hpp"
#include "dxq/xml/node.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace dxq::node {

struct XdpConfig {
    protocol::NodeIdentifier self;
    protocol::NodeName name;
    protocol::NodeIdentifier xqd;
    xml::Node document;
    std::string admin;
    std::chrono::milliseconds self_check_interval{30'000};
    std::chrono::milliseconds request_timeout{10'000};
    std::chrono::milliseconds backoff_initial{1'000};
    std::chrono::milliseconds backoff_max{60'000};
    /// 0 retries forever (until stopped).
    int max_join_attempts = 0;
    /// Send RMFROMDL before UNREGISTER when leaving.
    bool sign_off_before_unregister = true;
};

enum class XdpPhase { unregistered, registered, in_distribution_list };

std::string_view to_string(XdpPhase phase);

/// Decides whether a query may run; returning a message refuses it.
using QueryPolicy = std::function<std::optional<std::string>(const protocol::Message& query)>;

/// Waits for the given duration; returns false when the wait was aborted.
using Sleeper = std::function<bool(std::chrono::milliseconds)>;

struct XdpServices {
    const query::QueryProcessor* processor = nullptr;
    QueryPolicy policy;
    Sleeper sleeper;
};

struct JoinResult {
    XdpPhase phase = XdpPhase::unregistered;
    /// The ERROR the XQD answered with, if any.
    std::optional<protocol::ErrorCode> error;
    int attempts = 0;
};

struct LeaveResult {
    bool ok = false;
    XdpPhase phase = XdpPhase::unregistered;
    std::optional<protocol::ErrorCode> error;
    /// Local phase was fixed up from an INFO-REQUEST.
    bool reconciled = false;
};

struct SelfCheckResult {
    /// Registered / Is-in-DL as reported by the XQD; nullopt when unreachable.
    std::optional<XdpPhase> observed;
    XdpPhase phase = XdpPhase::unregistered;
    bool rejoined = false;
};

class XdpNode {
public:
    XdpNode(XdpConfig config, transport::Transport& transport, XdpServices services = {});
    ~XdpNode();

    XdpNode(const XdpNode&) = delete;
    XdpNode& operator=(const XdpNode&) = delete;

    /// Answers one inbound request.
    protocol::Message handle(const protocol::Message& request);

    /// REGISTER then ADDTODL, retrying transport failures with backoff.
    JoinResult join();

    /// RMFROMDL (if configured and listed) then UNREGISTER.
    LeaveResult leave();

    /// Asks the XQD for Registered / Is-in-DL and rejoins when dropped.
    SelfCheckResult self_check();

    XdpPhase phase() const { return phase_.load(); }
    const XdpConfig& config() const { return config_; }

    void start_listening();
    void stop_listening();

    /// Join, periodic self-checks, leave on stop. Blocks until request_stop().
    /// The caller is responsible for listening.
    void run();
    void request_stop();

private:
    struct RemoteStatus {
        bool registered = false;
        bool in_dl = false;
    };

    protocol::Message handle_query(const protocol::Message& m);
    protocol::Message handle_info(const protocol::Message& m);

    std::optional<RemoteStatus> query_status();
    protocol::Message send(protocol::MessageType type, std::function<void(protocol::Message&)> fill = {});
    bool register_once(JoinResult& result);
    bool add_to_dl_once(JoinResult& result);
    JoinResult join_locked();
    bool sleep(std::chrono::milliseconds d);

    XdpConfig config_;
    transport::Transport& transport_;
    XdpServices services_;
    query::SubsetQueryProcessor default_processor_;

    std::atomic<XdpPhase> phase_{XdpPhase::unregistered};
    std::atomic<bool> wants_session_{false};
    std::atomic<bool> stopping_{false};
    std::mutex session_mutex_;

    std::mutex active_mutex_;
    std::multimap<std::string, std::string> active_queries_;

    std::unique_ptr<transport::Listener> listener_;
};

} // namespace dxq::node
