#pragma once

#include "dxq/merge/merge.hpp"
#include "dxq/node/clock.hpp"
#include "dxq/node/executor.hpp"
#include "dxq/node/identifier_generator.hpp"
#include "dxq/protocol/message.hpp"
#include "dxq/transport/transport.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace dxq::node {

struct XqdConfig {
    protocol::NodeIdentifier self;
    protocol::NodeName name;
    std::string admin;
    std::chrono::milliseconds ping_interval{15'000};
    /// Timeout for pings and fanned-out queries.
    std::chrono::milliseconds request_timeout{5'000};
    /// Consecutive misses after the DL removal that lead to unregistering.
    int unregister_after_misses = 3;
    std::chrono::milliseconds merge_query_expiry{120'000};
    /// How long MERGE-ALGORITHM waits for an unfinished fan-out.
    std::chrono::milliseconds merge_wait{30'000};
    std::optional<std::uint32_t> identifier_seed;
    /// Query all DL members at once rather than one after another.
    bool parallel_fanout = true;
};

struct XqdServices {
    /// Runs user-defined fan-outs; a ThreadExecutor is used when null.
    Executor* executor = nullptr;
    /// Drives expiry; a SteadyClock is used when null.
    const Clock* clock = nullptr;
    const query::QueryProcessor* processor = nullptr;
};

struct XdpRecord {
    protocol::NodeIdentifier identifier;
    protocol::NodeName name;
    TimePoint registered_at{};
    bool in_distribution_list = false;
    int missed_pings = 0;
};

struct SweepReport {
    std::vector<XdpRecord> removed_from_dl;
    std::vector<XdpRecord> unregistered;
    std::size_t expired_transactions = 0;
};

class XqdNode {
public:
    XqdNode(XqdConfig config, transport::Transport& transport, XqdServices services = {});
    ~XqdNode();

    XqdNode(const XqdNode&) = delete;
    XqdNode& operator=(const XqdNode&) = delete;

    /// Answers one inbound request.
    protocol::Message handle(const protocol::Message& request);

    /// Pings every registered XDP once and applies the removal policy.
    SweepReport connectivity_sweep();

    /// Sends INFO-REQUEST to `target` and returns its reply.
    protocol::Message inquire(const protocol::NodeIdentifier& target, const std::string& request);

    /// Registered XDPs in registration order.
    std::vector<XdpRecord> registry() const;
    /// Distribution List members in the order they joined it.
    std::vector<XdpRecord> distribution_list() const;
    std::size_t open_transactions() const;

    const XqdConfig& config() const { return config_; }

    /// Listens and, when ping_interval > 0, sweeps periodically.
    void start();
    void stop();

private:
    struct Target {
        protocol::NodeIdentifier identifier;
        protocol::NodeName name;
        std::string sub_txn;
    };

    struct Failure {
        protocol::NodeName name;
        protocol::ErrorCode code;
        std::string detail;
    };

    enum class Phase { awaiting_merge_query, distributing, merging, done };

    struct Transaction {
        protocol::NodeIdentifier client;
        std::string client_txn;
        std::string algorithm;
        std::optional<int> depth;
        std::string query;
        std::vector<Target> targets;
        std::vector<std::optional<merge::XdpResult>> results;
        std::vector<Failure> failures;
        Phase phase = Phase::distributing;
        TimePoint created{};
        bool fanout_done = false;
        std::mutex mutex;
        std::condition_variable done_cv;
    };

    using TxnKey = std::pair<std::string, std::string>;

    protocol::Message dispatch(const protocol::Message& m);
    protocol::Message handle_register(const protocol::Message& m);
    protocol::Message handle_unregister(const protocol::Message& m);
    protocol::Message handle_add_to_dl(const protocol::Message& m);
    protocol::Message handle_rm_from_dl(const protocol::Message& m);
    protocol::Message handle_info(const protocol::Message& m);
    protocol::Message handle_query(const protocol::Message& m);
    protocol::Message handle_merge_algorithm(const protocol::Message& m);

    std::vector<Target> snapshot_targets();
    void fan_out(Transaction& t);
    void query_target(const Transaction& t, std::size_t index, std::optional<merge::XdpResult>& result,
                      std::optional<Failure>& failure);
    protocol::Message merged_reply(const Transaction& t, const protocol::NodeIdentifier& to, const std::string& body);
    protocol::Message all_failed_reply(const Transaction& t, const protocol::NodeIdentifier& to);
    protocol::NodeIdentifier client_identity(const protocol::Message& m);
    std::size_t expire_transactions();
    void finish(const TxnKey& key);

    XqdConfig config_;
    transport::Transport& transport_;
    XqdServices services_;
    SteadyClock default_clock_;
    query::SubsetQueryProcessor default_processor_;
    std::unique_ptr<ThreadExecutor> default_executor_;

    mutable std::mutex registry_mutex_;
    std::vector<XdpRecord> registry_;
    std::map<std::string, std::uint64_t> dl_order_;
    std::uint64_t next_dl_seq_ = 0;

    mutable std::mutex txn_mutex_;
    std::map<TxnKey, std::shared_ptr<Transaction>> transactions_;
    std::atomic<std::uint64_t> next_sub_txn_{0};

    std::mutex id_mutex_;
    IdentifierGenerator ids_;

    std::unique_ptr<transport::Listener> listener_;
    std::mutex sweep_mutex_;
    std::condition_variable sweep_cv_;
    bool stopping_ = false;
    std::thread sweeper_;
};

} // namespace dxq::node
