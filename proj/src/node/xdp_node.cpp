#include "dxq/node/xdp_node.hpp"

#include "dxq/node/info.hpp"
#include "dxq/node/log.hpp"
#include "dxq/protocol/lists.hpp"

#include <algorithm>
#include <thread>

namespace dxq::node {

using protocol::ErrorCode;
using protocol::Message;
using protocol::MessageType;
using protocol::NodeIdentifier;
using protocol::ProtocolError;
namespace h = protocol::header;
namespace ec = protocol::error_code;

std::string_view to_string(XdpPhase phase)
{
    switch (phase) {
    case XdpPhase::unregistered: return "unregistered";
    case XdpPhase::registered: return "registered";
    case XdpPhase::in_distribution_list: return "in-distribution-list";
    }
    return "?";
}

XdpNode::XdpNode(XdpConfig config, transport::Transport& transport, XdpServices services)
    : config_(std::move(config)), transport_(transport), services_(std::move(services))
{
    if (config_.self.empty())
        throw std::invalid_argument("XDP needs a non-empty identifier");
    if (!services_.processor)
        services_.processor = &default_processor_;
}

XdpNode::~XdpNode() { stop_listening(); }

Message XdpNode::handle(const Message& request)
{
    Message response;
    switch (request.type) {
    case MessageType::xml_query:
        response = handle_query(request);
        break;
    case MessageType::info_request:
        response = handle_info(request);
        break;
    default:
        response = protocol::make_error(config_.self, request.from(), ec::unexpected_message,
                                        std::string(protocol::to_string(request.type)) + " is not accepted by an XDP");
        break;
    }
    log::exchange(config_.name.str(), request, response);
    return response;
}

Message XdpNode::handle_query(const Message& m)
{
    const auto* txn = m.find(h::transaction_id);
    if (!txn)
        return protocol::make_error(config_.self, m.from(), ec::missing_header, std::string(h::transaction_id));
    if (!protocol::TransactionId::is_valid(*txn))
        return protocol::make_error(config_.self, m.from(), ec::invalid_message, "invalid Transaction-ID");
    if (!m.body)
        return protocol::make_error(config_.self, m.from(), ec::missing_content, "query body missing");
    if (services_.policy) {
        if (auto reason = services_.policy(m))
            return protocol::make_error(config_.self, m.from(), ec::query_refused, *reason);
    }

    const auto key = m.from().str();
    std::multimap<std::string, std::string>::iterator entry;
    {
        std::lock_guard lock(active_mutex_);
        entry = active_queries_.emplace(key, *txn);
    }
    Message reply;
    try {
        auto result = services_.processor->execute(*m.body, config_.document);
        reply = Message(MessageType::xml_query_result, config_.self, m.from());
        reply.set(h::transaction_id, *txn);
        reply.set_body(std::move(result));
    } catch (const query::QueryError& e) {
        reply = protocol::make_error(config_.self, m.from(), ec::query_processor, e.what());
    }
    {
        std::lock_guard lock(active_mutex_);
        active_queries_.erase(entry);
    }
    return reply;
}

Message XdpNode::handle_info(const Message& m)
{
    auto request = parse_info_request(m);
    if (request.all)
        request.names = {"Node-Name", "Admin", "Active-Queries"};
    const auto asker = m.from().str();
    return make_info_reply(config_.self, m.from(), request.names, [&](const std::string& name) -> std::string {
        if (name == "Node-Name")
            return config_.name.str();
        if (name == "Admin")
            return config_.admin;
        if (name == "Registered" || name == "Is-in-DL")
            return "no";
        if (name == "Active-Queries") {
            std::vector<std::string> txns;
            std::lock_guard lock(active_mutex_);
            auto [first, last] = active_queries_.equal_range(asker);
            for (auto it = first; it != last; ++it)
                txns.push_back(it->second);
            return protocol::join_space_list(txns);
        }
        return "";
    });
}

Message XdpNode::send(MessageType type, std::function<void(Message&)> fill)
{
    Message m(type, config_.self, config_.xqd);
    if (fill)
        fill(m);
    return transport_.request(config_.xqd, m, config_.request_timeout);
}

bool XdpNode::sleep(std::chrono::milliseconds d)
{
    if (stopping_.load())
        return false;
    if (services_.sleeper)
        return services_.sleeper(d);
    const auto until = std::chrono::steady_clock::now() + d;
    while (std::chrono::steady_clock::now() < until) {
        if (stopping_.load())
            return false;
        std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
            std::chrono::milliseconds(50), until - std::chrono::steady_clock::now()));
    }
    return !stopping_.load();
}

std::optional<XdpNode::RemoteStatus> XdpNode::query_status()
{
    try {
        const auto reply = send(MessageType::info_request, [](Message& m) { m.set(h::request, "Registered Is-in-DL"); });
        if (reply.type != MessageType::info_reply)
            return std::nullopt;
        return RemoteStatus{reply.get("Registered") == "yes", reply.get("Is-in-DL") == "yes"};
    } catch (const transport::TransportError& e) {
        log::write(log::Level::warn, "status-check-failed", {{"node", config_.name.str()}, {"reason", e.what()}});
        return std::nullopt;
    }
}

/// One REGISTER exchange. True on OK; false on ERROR (result.error set) or
/// transport failure.
bool XdpNode::register_once(JoinResult& result)
{
    try {
        const auto reply = send(MessageType::register_node, [&](Message& m) { m.set(h::node_name, config_.name.str()); });
        if (reply.type == MessageType::ok) {
            phase_ = XdpPhase::registered;
            return true;
        }
        result.error = reply.type == MessageType::error ? protocol::error_code_of(reply) : ec::unexpected_message;
    } catch (const transport::TransportError& e) {
        log::write(log::Level::warn, "register-failed", {{"node", config_.name.str()}, {"reason", e.what()}});
    } catch (const ProtocolError& e) {
        result.error = e.code();
    }
    return false;
}

bool XdpNode::add_to_dl_once(JoinResult& result)
{
    try {
        const auto reply = send(MessageType::add_to_dl);
        if (reply.type == MessageType::ok) {
            phase_ = XdpPhase::in_distribution_list;
            return true;
        }
        result.error = reply.type == MessageType::error ? protocol::error_code_of(reply) : ec::unexpected_message;
    } catch (const transport::TransportError& e) {
        log::write(log::Level::warn, "addtodl-failed", {{"node", config_.name.str()}, {"reason", e.what()}});
    } catch (const ProtocolError& e) {
        result.error = e.code();
    }
    return false;
}

JoinResult XdpNode::join()
{
    std::lock_guard lock(session_mutex_);
    wants_session_ = true;
    return join_locked();
}

JoinResult XdpNode::join_locked()
{
    JoinResult result;
    auto backoff = config_.backoff_initial;
    auto wait = [&] {
        if (config_.max_join_attempts > 0 && result.attempts >= config_.max_join_attempts)
            return false;
        if (!sleep(backoff))
            return false;
        backoff = std::min(backoff * 2, config_.backoff_max);
        return true;
    };

    for (;;) {
        ++result.attempts;
        result.error.reset();
        if (phase_ == XdpPhase::unregistered && !register_once(result)) {
            if (result.error)
                break;
            if (!wait())
                break;
            continue;
        }
        if (phase_ == XdpPhase::registered && !add_to_dl_once(result)) {
            if (result.error)
                break;
            // The ADDTODL may have arrived even though the reply did not.
            if (auto status = query_status()) {
                if (status->registered && status->in_dl) {
                    phase_ = XdpPhase::in_distribution_list;
                    break;
                }
                if (!status->registered)
                    phase_ = XdpPhase::unregistered;
            }
            if (!wait())
                break;
            continue;
        }
        break;
    }
    result.phase = phase_;
    log::write(log::Level::info, "join",
               {{"node", config_.name.str()},
                {"phase", std::string(to_string(result.phase))},
                {"attempts", std::to_string(result.attempts)},
                {"code", result.error ? result.error->to_string() : ""}});
    return result;
}

LeaveResult XdpNode::leave()
{
    std::lock_guard lock(session_mutex_);
    wants_session_ = false;
    LeaveResult result;
    if (phase_ == XdpPhase::unregistered) {
        result.phase = XdpPhase::unregistered;
        return result;
    }

    auto exchange = [&](MessageType type) -> bool {
        try {
            const auto reply = send(type);
            if (reply.type == MessageType::ok)
                return true;
            result.error = reply.type == MessageType::error ? protocol::error_code_of(reply) : ec::unexpected_message;
        } catch (const transport::TransportError& e) {
            log::write(log::Level::warn, "leave-exchange-failed",
                       {{"node", config_.name.str()}, {"type", std::string(protocol::to_string(type))}, {"reason", e.what()}});
        } catch (const ProtocolError& e) {
            result.error = e.code();
        }
        return false;
    };

    if (config_.sign_off_before_unregister && phase_ == XdpPhase::in_distribution_list) {
        if (exchange(MessageType::rm_from_dl))
            phase_ = XdpPhase::registered;
    }
    if (exchange(MessageType::unregister_node)) {
        phase_ = XdpPhase::unregistered;
        result.ok = true;
    } else if (auto status = query_status()) {
        // Registration state is unclear; ask the XQD.
        phase_ = !status->registered ? XdpPhase::unregistered
                 : status->in_dl     ? XdpPhase::in_distribution_list
                                     : XdpPhase::registered;
        result.reconciled = true;
        result.ok = phase_ == XdpPhase::unregistered;
    }
    result.phase = phase_;
    log::write(log::Level::info, "leave",
               {{"node", config_.name.str()},
                {"phase", std::string(to_string(result.phase))},
                {"code", result.error ? result.error->to_string() : ""}});
    return result;
}

SelfCheckResult XdpNode::self_check()
{
    std::lock_guard lock(session_mutex_);
    SelfCheckResult result;
    const auto status = query_status();
    if (!status) {
        result.phase = phase_;
        return result;
    }
    result.observed = !status->registered ? XdpPhase::unregistered
                      : status->in_dl     ? XdpPhase::in_distribution_list
                                          : XdpPhase::registered;
    phase_ = *result.observed;
    if (wants_session_ && phase_ != XdpPhase::in_distribution_list) {
        log::write(log::Level::info, "rejoin",
                   {{"node", config_.name.str()}, {"observed", std::string(to_string(*result.observed))}});
        JoinResult join;
        if (phase_ == XdpPhase::unregistered)
            register_once(join);
        if (phase_ == XdpPhase::registered)
            add_to_dl_once(join);
        result.rejoined = phase_ == XdpPhase::in_distribution_list;
    }
    result.phase = phase_;
    return result;
}

void XdpNode::start_listening()
{
    if (!listener_)
        listener_ = transport_.listen(config_.self, [this](const Message& m) { return handle(m); });
}

void XdpNode::stop_listening()
{
    if (listener_) {
        listener_->stop();
        listener_.reset();
    }
}

void XdpNode::run()
{
    join();
    while (sleep(config_.self_check_interval))
        self_check();
    stopping_ = false;  // allow the farewell exchanges
    leave();
    stopping_ = true;
}

void XdpNode::request_stop() { stopping_ = true; }

} // namespace dxq::node
