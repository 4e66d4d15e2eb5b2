#pragma once

#include "dxq/protocol/message.hpp"
#include "dxq/transport/transport.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dxq::node {

struct QueryRequest {
    std::string transaction_id;
    std::string algorithm;
    std::string query;
    std::optional<int> depth;
    /// Required for user-defined.
    std::optional<std::string> merge_query;
};

struct QueryOutcome {
    /// XML-QUERY-MERGED-RESULT or ERROR.
    protocol::Message final;
    /// Every message sent and received, in order.
    std::vector<protocol::Message> exchange;

    bool ok() const { return final.type == protocol::MessageType::xml_query_merged_result; }
};

/// DXQ-Client. Starts without an identifier and adopts the one the XQD
/// assigns in its first successful reply.
class Client {
public:
    Client(transport::Transport& transport, protocol::NodeIdentifier xqd,
           std::chrono::milliseconds timeout = transport::default_request_timeout);

    /// Sends XML-QUERY and returns the XQD's reply: OK for user-defined,
    /// otherwise the merged result or ERROR.
    protocol::Message submit(const QueryRequest& request);

    /// Second phase of a user-defined transaction.
    protocol::Message send_merge_algorithm(const std::string& transaction_id, const std::string& merge_query);

    /// Full choreography for any algorithm.
    QueryOutcome run(const QueryRequest& request);

    /// INFO-REQUEST to any node.
    protocol::Message info(const protocol::NodeIdentifier& target, const std::string& request);

    const protocol::NodeIdentifier& identifier() const { return self_; }
    void set_identifier(protocol::NodeIdentifier id) { self_ = std::move(id); }

    /// Random token usable as a Transaction-ID.
    static std::string random_transaction_id();

private:
    protocol::Message exchange(const protocol::Message& m, std::vector<protocol::Message>* record);
    void adopt(const protocol::Message& reply);

    transport::Transport& transport_;
    protocol::NodeIdentifier xqd_;
    protocol::NodeIdentifier self_;
    std::chrono::milliseconds timeout_;
};

} // namespace dxq::node
