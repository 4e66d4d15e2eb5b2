#include "dxq/node/client.hpp"

#include "dxq/merge/merge.hpp"

#include <cstdio>
#include <random>

namespace dxq::node {

using protocol::Message;
using protocol::MessageType;
namespace h = protocol::header;

Client::Client(transport::Transport& transport, protocol::NodeIdentifier xqd, std::chrono::milliseconds timeout)
    : transport_(transport), xqd_(std::move(xqd)), timeout_(timeout)
{
}

std::string Client::random_transaction_id()
{
    std::random_device rd;
    std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    char text[17];
    std::snprintf(text, sizeof text, "%016llx", static_cast<unsigned long long>(rng()));
    return text;
}

Message Client::exchange(const Message& m, std::vector<Message>* record)
{
    if (record)
        record->push_back(m);
    auto reply = transport_.request(xqd_, m, timeout_);
    if (record)
        record->push_back(reply);
    return reply;
}

void Client::adopt(const Message& reply)
{
    if (self_.empty() && reply.type != MessageType::error && !reply.to().empty())
        self_ = reply.to();
}

Message Client::submit(const QueryRequest& request)
{
    Message m(MessageType::xml_query, self_, xqd_);
    m.set(h::transaction_id, request.transaction_id);
    m.set(h::merge_algorithm, request.algorithm);
    if (request.depth)
        m.set(h::depth, std::to_string(*request.depth));
    m.set_body(request.query);
    auto reply = exchange(m, nullptr);
    adopt(reply);
    return reply;
}

Message Client::send_merge_algorithm(const std::string& transaction_id, const std::string& merge_query)
{
    Message m(MessageType::merge_algorithm, self_, xqd_);
    m.set(h::transaction_id, transaction_id);
    m.set_body(merge_query);
    return exchange(m, nullptr);
}

QueryOutcome Client::run(const QueryRequest& request)
{
    QueryOutcome outcome;
    Message m(MessageType::xml_query, self_, xqd_);
    m.set(h::transaction_id, request.transaction_id);
    m.set(h::merge_algorithm, request.algorithm);
    if (request.depth)
        m.set(h::depth, std::to_string(*request.depth));
    m.set_body(request.query);
    auto reply = exchange(m, &outcome.exchange);
    adopt(reply);

    if (request.algorithm == merge::user_defined && reply.type == MessageType::ok) {
        Message second(MessageType::merge_algorithm, self_, xqd_);
        second.set(h::transaction_id, request.transaction_id);
        second.set_body(request.merge_query.value_or(""));
        reply = exchange(second, &outcome.exchange);
    }
    outcome.final = std::move(reply);
    return outcome;
}

Message Client::info(const protocol::NodeIdentifier& target, const std::string& request)
{
    Message m(MessageType::info_request, self_, target);
    m.set(h::request, request);
    return transport_.request(target, m, timeout_);
}

} // namespace dxq::node
