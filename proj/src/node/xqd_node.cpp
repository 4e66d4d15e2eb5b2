#include "dxq/node/xqd_node.hpp"

#include "dxq/node/info.hpp"
#include "dxq/node/log.hpp"
#include "dxq/protocol/lists.hpp"

#include <algorithm>
#include <charconv>

namespace dxq::node {

using protocol::ErrorCode;
using protocol::Message;
using protocol::MessageType;
using protocol::NodeIdentifier;
using protocol::NodeName;
using protocol::ProtocolError;
namespace h = protocol::header;
namespace ec = protocol::error_code;

namespace {

const std::vector<std::string> xqd_info_names = {
    "Node-Name", "Admin", "Registered", "Is-in-DL", "Merge-Algorithms", "Registered-XDPs", "Active-XDPs", "Active-Queries",
};

std::vector<protocol::XdpSpec> specs_of(const std::vector<XdpRecord>& records)
{
    std::vector<protocol::XdpSpec> specs;
    for (const auto& r : records)
        specs.push_back({r.identifier, r.name});
    return specs;
}

} // namespace

XqdNode::XqdNode(XqdConfig config, transport::Transport& transport, XqdServices services)
    : config_(std::move(config)), transport_(transport), services_(services), ids_(config_.identifier_seed)
{
    if (config_.self.empty())
        throw std::invalid_argument("XQD needs a non-empty identifier");
    if (!services_.clock)
        services_.clock = &default_clock_;
    if (!services_.processor)
        services_.processor = &default_processor_;
    if (!services_.executor) {
        default_executor_ = std::make_unique<ThreadExecutor>();
        services_.executor = default_executor_.get();
    }
}

XqdNode::~XqdNode()
{
    stop();
    default_executor_.reset();
}

Message XqdNode::handle(const Message& request)
{
    Message response;
    try {
        response = dispatch(request);
    } catch (const ProtocolError& e) {
        response = protocol::make_error(config_.self, request.from(), e.code(), e.what());
    }
    log::exchange(config_.name.str(), request, response);
    return response;
}

Message XqdNode::dispatch(const Message& m)
{
    switch (m.type) {
    case MessageType::register_node: return handle_register(m);
    case MessageType::unregister_node: return handle_unregister(m);
    case MessageType::add_to_dl: return handle_add_to_dl(m);
    case MessageType::rm_from_dl: return handle_rm_from_dl(m);
    case MessageType::info_request: return handle_info(m);
    case MessageType::xml_query: return handle_query(m);
    case MessageType::merge_algorithm: return handle_merge_algorithm(m);
    default:
        return protocol::make_error(config_.self, m.from(), ec::unexpected_message,
                                    std::string(protocol::to_string(m.type)) + " is not accepted by an XQD");
    }
}

Message XqdNode::handle_register(const Message& m)
{
    const auto from = m.from();
    if (from.empty())
        return protocol::make_error(config_.self, from, ec::unexpected_message, "REGISTER needs a sender identifier");
    const auto* name = m.find(h::node_name);
    if (!name)
        return protocol::make_error(config_.self, from, ec::missing_header, std::string(h::node_name));
    if (!NodeName::is_valid(*name))
        return protocol::make_error(config_.self, from, ec::invalid_message, "invalid Node-Name");

    std::lock_guard lock(registry_mutex_);
    auto it = std::find_if(registry_.begin(), registry_.end(), [&](const XdpRecord& r) { return r.identifier == from; });
    if (it == registry_.end()) {
        registry_.push_back({from, NodeName::parse(*name), services_.clock->now(), false, 0});
    } else {
        it->name = NodeName::parse(*name);
        it->registered_at = services_.clock->now();
        it->missed_pings = 0;
    }
    return Message(MessageType::ok, config_.self, from);
}

Message XqdNode::handle_unregister(const Message& m)
{
    const auto from = m.from();
    std::lock_guard lock(registry_mutex_);
    auto it = std::find_if(registry_.begin(), registry_.end(), [&](const XdpRecord& r) { return r.identifier == from; });
    if (it == registry_.end())
        return protocol::make_error(config_.self, from, ec::unexpected_message, "not registered");
    registry_.erase(it);
    dl_order_.erase(from.str());
    return Message(MessageType::ok, config_.self, from);
}

Message XqdNode::handle_add_to_dl(const Message& m)
{
    const auto from = m.from();
    std::lock_guard lock(registry_mutex_);
    auto it = std::find_if(registry_.begin(), registry_.end(), [&](const XdpRecord& r) { return r.identifier == from; });
    if (it == registry_.end())
        return protocol::make_error(config_.self, from, ec::unexpected_message, "ADDTODL before REGISTER");
    if (!it->in_distribution_list) {
        it->in_distribution_list = true;
        dl_order_[from.str()] = next_dl_seq_++;
    }
    it->missed_pings = 0;
    return Message(MessageType::ok, config_.self, from);
}

Message XqdNode::handle_rm_from_dl(const Message& m)
{
    const auto from = m.from();
    std::lock_guard lock(registry_mutex_);
    auto it = std::find_if(registry_.begin(), registry_.end(), [&](const XdpRecord& r) { return r.identifier == from; });
    if (it == registry_.end())
        return protocol::make_error(config_.self, from, ec::unexpected_message, "not registered");
    it->in_distribution_list = false;
    dl_order_.erase(from.str());
    return Message(MessageType::ok, config_.self, from);
}

Message XqdNode::handle_info(const Message& m)
{
    auto request = parse_info_request(m);
    if (request.all)
        request.names = xqd_info_names;
    const auto asker = m.from();

    return make_info_reply(config_.self, asker, request.names, [&](const std::string& name) -> std::string {
        if (name == "Node-Name")
            return config_.name.str();
        if (name == "Admin")
            return config_.admin;
        if (name == "Registered" || name == "Is-in-DL") {
            std::lock_guard lock(registry_mutex_);
            auto it = std::find_if(registry_.begin(), registry_.end(), [&](const XdpRecord& r) { return r.identifier == asker; });
            const bool yes = it != registry_.end() && (name == "Registered" || it->in_distribution_list);
            return yes ? "yes" : "no";
        }
        if (name == "Merge-Algorithms")
            return protocol::join_space_list(merge::list_algorithms());
        if (name == "Registered-XDPs")
            return protocol::format_xdp_spec_list(specs_of(registry()));
        if (name == "Active-XDPs")
            return protocol::format_xdp_spec_list(specs_of(distribution_list()));
        if (name == "Active-Queries") {
            std::vector<std::string> txns;
            std::lock_guard lock(txn_mutex_);
            for (const auto& [key, t] : transactions_) {
                if (key.first == asker.str())
                    txns.push_back(key.second);
            }
            return protocol::join_space_list(txns);
        }
        return "";
    });
}

std::vector<XdpRecord> XqdNode::registry() const
{
    std::lock_guard lock(registry_mutex_);
    return registry_;
}

std::vector<XdpRecord> XqdNode::distribution_list() const
{
    std::vector<std::pair<std::uint64_t, XdpRecord>> members;
    {
        std::lock_guard lock(registry_mutex_);
        for (const auto& r : registry_) {
            if (r.in_distribution_list)
                members.emplace_back(dl_order_.at(r.identifier.str()), r);
        }
    }
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<XdpRecord> out;
    for (auto& [seq, r] : members)
        out.push_back(std::move(r));
    return out;
}

std::size_t XqdNode::open_transactions() const
{
    std::lock_guard lock(txn_mutex_);
    return transactions_.size();
}

NodeIdentifier XqdNode::client_identity(const Message& m)
{
    auto from = m.from();
    if (!from.empty())
        return from;
    std::lock_guard id_lock(id_mutex_);
    for (;;) {
        auto candidate = ids_.next();
        std::lock_guard lock(txn_mutex_);
        const bool in_use = std::any_of(transactions_.begin(), transactions_.end(),
                                        [&](const auto& entry) { return entry.first.first == candidate.str(); });
        if (!in_use)
            return candidate;
    }
}

std::vector<XqdNode::Target> XqdNode::snapshot_targets()
{
    std::vector<Target> targets;
    for (const auto& r : distribution_list())
        targets.push_back({r.identifier, r.name, std::to_string(next_sub_txn_.fetch_add(1))});
    return targets;
}

Message XqdNode::handle_query(const Message& m)
{
    const auto error = [&](ErrorCode code, std::string detail) {
        return protocol::make_error(config_.self, m.from(), code, std::move(detail));
    };

    const auto* algorithm = m.find(h::merge_algorithm);
    if (!algorithm)
        return error(ec::missing_header, std::string(h::merge_algorithm));
    const auto* txn = m.find(h::transaction_id);
    if (!txn)
        return error(ec::missing_header, std::string(h::transaction_id));
    if (!protocol::TransactionId::is_valid(*txn))
        return error(ec::invalid_message, "invalid Transaction-ID");
    if (!m.body)
        return error(ec::missing_content, "query body missing");
    if (!protocol::is_valid_merge_algorithm_name(*algorithm))
        return error(ec::invalid_message, "invalid Merge-Algorithm '" + *algorithm + "'");
    if (!merge::is_supported(*algorithm))
        return error(ec::unsupported_merge_algorithm, "unsupported merge algorithm '" + *algorithm + "'");

    std::optional<int> depth;
    if (*algorithm == merge::remove_duplicates) {
        const auto* text = m.find(h::depth);
        if (!text)
            return error(ec::missing_header, std::string(h::depth));
        int value = 0;
        const auto [ptr, err] = std::from_chars(text->data(), text->data() + text->size(), value);
        if (text->empty() || err != std::errc{} || ptr != text->data() + text->size())
            return error(ec::invalid_message, "invalid Depth '" + *text + "'");
        depth = value;
    }

    auto targets = snapshot_targets();
    if (targets.empty())
        return protocol::make_error(config_.self, m.from(), ec::no_providers);

    auto t = std::make_shared<Transaction>();
    t->client = client_identity(m);
    t->client_txn = *txn;
    t->algorithm = *algorithm;
    t->depth = depth;
    t->query = *m.body;
    t->targets = std::move(targets);
    t->created = services_.clock->now();
    t->phase = *algorithm == merge::user_defined ? Phase::awaiting_merge_query : Phase::distributing;

    const TxnKey key{t->client.str(), t->client_txn};
    {
        std::lock_guard lock(txn_mutex_);
        if (!transactions_.emplace(key, t).second)
            return error(ec::unexpected_message, "Transaction-ID " + *txn + " is already in progress");
    }

    if (*algorithm == merge::user_defined) {
        services_.executor->submit([this, t] { fan_out(*t); });
        Message ok(MessageType::ok, config_.self, t->client);
        ok.set(h::transaction_id, t->client_txn);
        return ok;
    }

    fan_out(*t);
    Message reply;
    std::vector<merge::XdpResult> successes;
    for (auto& r : t->results) {
        if (r)
            successes.push_back(*r);
    }
    if (successes.empty()) {
        reply = all_failed_reply(*t, m.from());
    } else {
        try {
            const auto body = merge::run({t->algorithm, t->depth, std::nullopt}, successes, *services_.processor);
            reply = merged_reply(*t, t->client, body);
        } catch (const merge::MergeError& e) {
            reply = error(e.code(), e.what());
        }
    }
    finish(key);
    return reply;
}

void XqdNode::query_target(const Transaction& t, std::size_t index, std::optional<merge::XdpResult>& result,
                           std::optional<Failure>& failure)
{
    const auto& target = t.targets[index];
    auto fail = [&](ErrorCode code, std::string detail) {
        failure = Failure{target.name, code, std::move(detail)};
        log::write(log::Level::warn, "fanout-failure",
                   {{"node", config_.name.str()}, {"xdp", target.name.str()}, {"txn", target.sub_txn},
                    {"code", code.to_string()}, {"detail", failure->detail}});
    };

    Message query(MessageType::xml_query, config_.self, target.identifier);
    query.set(h::transaction_id, target.sub_txn);
    query.set_body(t.query);

    Message reply;
    try {
        reply = transport_.request(target.identifier, query, config_.request_timeout);
    } catch (const transport::TransportError& e) {
        fail(ec::internal, std::string("transport ") + std::string(transport::to_string(e.kind())) + ": " + e.what());
        return;
    }

    if (reply.type == MessageType::error) {
        ErrorCode code = ec::internal;
        try {
            code = protocol::error_code_of(reply);
        } catch (const ProtocolError&) {
        }
        fail(code, reply.body.value_or(""));
        return;
    }
    if (reply.type != MessageType::xml_query_result) {
        fail(ec::unexpected_message, "unexpected " + std::string(protocol::to_string(reply.type)));
        return;
    }
    if (reply.get(h::transaction_id) != target.sub_txn) {
        fail(ec::invalid_message, "result carries the wrong Transaction-ID");
        return;
    }
    try {
        result = merge::XdpResult{target.name, xml::parse_fragment(reply.body.value_or(""))};
    } catch (const xml::XmlError& e) {
        fail(ec::invalid_message, std::string("result is not XML: ") + e.what());
    }
}

void XqdNode::fan_out(Transaction& t)
{
    const auto n = t.targets.size();
    std::vector<std::optional<merge::XdpResult>> results(n);
    std::vector<std::optional<Failure>> failures(n);

    if (config_.parallel_fanout && n > 1) {
        std::vector<std::jthread> workers;
        workers.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            workers.emplace_back([&, i] { query_target(t, i, results[i], failures[i]); });
    } else {
        for (std::size_t i = 0; i < n; ++i)
            query_target(t, i, results[i], failures[i]);
    }

    std::lock_guard lock(t.mutex);
    t.results = std::move(results);
    for (auto& f : failures) {
        if (f)
            t.failures.push_back(std::move(*f));
    }
    t.fanout_done = true;
    t.done_cv.notify_all();
}

Message XqdNode::merged_reply(const Transaction& t, const NodeIdentifier& to, const std::string& body)
{
    std::vector<NodeName> sources;
    for (const auto& r : t.results) {
        if (r)
            sources.push_back(r->source_name);
    }
    Message reply(MessageType::xml_query_merged_result, config_.self, to);
    reply.set(h::transaction_id, t.client_txn);
    reply.set(h::result_sources, protocol::format_result_sources(sources));
    reply.set_body(body);
    return reply;
}

Message XqdNode::all_failed_reply(const Transaction& t, const NodeIdentifier& to)
{
    std::string summary = "no XDP delivered a result:";
    for (const auto& f : t.failures)
        summary += " {" + f.name.str() + "} " + f.code.to_string();
    return protocol::make_error(config_.self, to, ec::internal, summary);
}

Message XqdNode::handle_merge_algorithm(const Message& m)
{
    const auto error = [&](ErrorCode code, std::string detail) {
        return protocol::make_error(config_.self, m.from(), code, std::move(detail));
    };

    const auto* txn = m.find(h::transaction_id);
    if (!txn)
        return error(ec::missing_header, std::string(h::transaction_id));
    if (!m.body)
        return error(ec::missing_content, "merge query missing");

    expire_transactions();
    const TxnKey key{m.from().str(), *txn};
    std::shared_ptr<Transaction> t;
    {
        std::lock_guard lock(txn_mutex_);
        if (auto it = transactions_.find(key); it != transactions_.end())
            t = it->second;
    }
    if (!t)
        return error(ec::unexpected_message, "no transaction " + *txn + " awaits a merge query");

    std::unique_lock lock(t->mutex);
    if (t->phase != Phase::awaiting_merge_query)
        return error(ec::unexpected_message, "transaction " + *txn + " does not await a merge query");
    t->phase = Phase::merging;
    if (!t->done_cv.wait_for(lock, config_.merge_wait, [&] { return t->fanout_done; })) {
        lock.unlock();
        finish(key);
        return error(ec::internal, "distribution did not complete in time");
    }
    lock.unlock();

    std::vector<merge::XdpResult> successes;
    for (const auto& r : t->results) {
        if (r)
            successes.push_back(*r);
    }
    Message reply;
    if (successes.empty()) {
        reply = all_failed_reply(*t, m.from());
    } else {
        try {
            reply = merged_reply(*t, m.from(), merge::merge_user_defined(successes, *m.body, *services_.processor));
        } catch (const merge::MergeError& e) {
            reply = error(e.code(), e.what());
        }
    }
    finish(key);
    return reply;
}

void XqdNode::finish(const TxnKey& key)
{
    std::shared_ptr<Transaction> t;
    {
        std::lock_guard lock(txn_mutex_);
        if (auto it = transactions_.find(key); it != transactions_.end()) {
            t = std::move(it->second);
            transactions_.erase(it);
        }
    }
    if (t) {
        std::lock_guard lock(t->mutex);
        t->phase = Phase::done;
    }
}

std::size_t XqdNode::expire_transactions()
{
    const auto now = services_.clock->now();
    std::vector<std::shared_ptr<Transaction>> expired;
    {
        std::lock_guard lock(txn_mutex_);
        for (auto it = transactions_.begin(); it != transactions_.end();) {
            auto& t = it->second;
            bool stale = false;
            {
                std::lock_guard tlock(t->mutex);
                stale = t->phase == Phase::awaiting_merge_query && now - t->created > config_.merge_query_expiry;
            }
            if (stale) {
                expired.push_back(std::move(t));
                it = transactions_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (const auto& t : expired) {
        log::write(log::Level::info, "transaction-expired",
                   {{"node", config_.name.str()}, {"client", t->client.str()}, {"txn", t->client_txn}});
    }
    return expired.size();
}

SweepReport XqdNode::connectivity_sweep()
{
    SweepReport report;
    report.expired_transactions = expire_transactions();

    for (const auto& record : registry()) {
        bool alive = false;
        try {
            Message ping(MessageType::info_request, config_.self, record.identifier);
            ping.set(h::request, "");
            alive = transport_.request(record.identifier, ping, config_.request_timeout).type == MessageType::info_reply;
        } catch (const transport::TransportError&) {
        }

        std::lock_guard lock(registry_mutex_);
        auto it = std::find_if(registry_.begin(), registry_.end(),
                               [&](const XdpRecord& r) { return r.identifier == record.identifier; });
        if (it == registry_.end())
            continue;
        if (alive) {
            it->missed_pings = 0;
            continue;
        }
        ++it->missed_pings;
        if (it->in_distribution_list) {
            it->in_distribution_list = false;
            dl_order_.erase(it->identifier.str());
            report.removed_from_dl.push_back(*it);
            log::write(log::Level::info, "removed-from-dl",
                       {{"node", config_.name.str()}, {"xdp", it->name.str()}, {"identifier", it->identifier.str()}});
        }
        if (it->missed_pings > config_.unregister_after_misses) {
            report.unregistered.push_back(*it);
            log::write(log::Level::info, "unregistered",
                       {{"node", config_.name.str()}, {"xdp", it->name.str()}, {"identifier", it->identifier.str()}});
            registry_.erase(it);
        }
    }
    return report;
}

Message XqdNode::inquire(const NodeIdentifier& target, const std::string& request)
{
    Message m(MessageType::info_request, config_.self, target);
    m.set(h::request, request);
    return transport_.request(target, m, config_.request_timeout);
}

void XqdNode::start()
{
    if (listener_)
        return;
    listener_ = transport_.listen(config_.self, [this](const Message& m) { return handle(m); });
    if (config_.ping_interval.count() > 0) {
        {
            std::lock_guard lock(sweep_mutex_);
            stopping_ = false;
        }
        sweeper_ = std::thread([this] {
            std::unique_lock lock(sweep_mutex_);
            while (!sweep_cv_.wait_for(lock, config_.ping_interval, [this] { return stopping_; })) {
                lock.unlock();
                connectivity_sweep();
                lock.lock();
            }
        });
    }
}

void XqdNode::stop()
{
    {
        std::lock_guard lock(sweep_mutex_);
        stopping_ = true;
    }
    sweep_cv_.notify_all();
    if (sweeper_.joinable())
        sweeper_.join();
    if (listener_) {
        listener_->stop();
        listener_.reset();
    }
}

} // namespace dxq::node
