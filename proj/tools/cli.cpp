#include "cli.hpp"

#include "dxq/node/client.hpp"
#include "dxq/node/info.hpp"
#include "dxq/node/log.hpp"
#include "dxq/node/xdp_node.hpp"
#include "dxq/node/xqd_node.hpp"
#include "dxq/transport/memory.hpp"
#include "dxq/transport/tcp.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

namespace dxq::cli {

using protocol::Message;
using protocol::MessageType;
using protocol::NodeIdentifier;
using protocol::NodeName;
namespace h = protocol::header;

namespace {

/// A problem with flags, files or configuration.
class ConfigProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string read_file(const std::string& path)
{
    if (path == "-")
        return std::string(std::istreambuf_iterator<char>(std::cin), {});
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigProblem("cannot read " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Query files usually end with a newline that is not part of the query.
std::string read_query_file(const std::string& path)
{
    auto text = read_file(path);
    if (!text.empty() && text.back() == '\n')
        text.pop_back();
    if (!text.empty() && text.back() == '\r')
        text.pop_back();
    return text;
}

xml::Node load_document(const std::string& path)
{
    const auto text = read_file(path);
    try {
        return xml::parse(text);
    } catch (const xml::XmlError& e) {
        throw ConfigProblem(path + ": " + e.what());
    }
}

NodeIdentifier identifier_arg(const std::string& text, const char* what)
{
    auto id = NodeIdentifier::try_parse(text);
    if (!id || id->empty())
        throw ConfigProblem(std::string("invalid ") + what + " identifier '" + text + "'");
    return *id;
}

NodeName name_arg(const std::string& text)
{
    if (!NodeName::is_valid(text))
        throw ConfigProblem("invalid node name '" + text + "'");
    return NodeName::parse(text);
}

std::chrono::milliseconds duration_arg(const std::string& text, const char* what)
{
    auto d = parse_duration(text);
    if (!d)
        throw ConfigProblem(std::string("invalid duration for ") + what + ": '" + text + "'");
    return *d;
}

/// Appends `--key value` for each config entry not set on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args)
{
    std::string path;
    std::set<std::string> given;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
        if (args[i].rfind("--", 0) == 0)
            given.insert(args[i].substr(2, args[i].find('=') == std::string::npos ? std::string::npos : args[i].find('=') - 2));
    }
    if (path.empty())
        return args;

    std::ifstream in(path);
    if (!in)
        throw ConfigProblem("cannot read config file " + path);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto text = trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';')
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigProblem(path + ":" + std::to_string(number) + ": expected key=value");
        const auto key = trim(std::string_view(text).substr(0, eq));
        auto value = trim(std::string_view(text).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty() || key == "config" || given.count(key))
            continue;
        if (value == "true") {
            args.push_back("--" + key);
        } else if (value != "false") {
            args.push_back("--" + key);
            args.push_back(value);
        }
    }
    return args;
}

/// Appends every frame to a file, for conformance diffing.
class WireDump {
public:
    explicit WireDump(const std::string& path)
    {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_)
                throw ConfigProblem("cannot write " + path);
        }
    }

    void attach(transport::Transport& t)
    {
        if (file_.is_open())
            t.set_wire_tap([this](std::string_view frame) {
                std::lock_guard lock(mutex_);
                file_.write(frame.data(), static_cast<std::streamsize>(frame.size()));
                file_.flush();
            });
    }

private:
    std::mutex mutex_;
    std::ofstream file_;
};

struct CommonOptions {
    std::string transport = "tcp";
    std::string dump_wire;
    std::string log_level;
    std::string config;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--transport", o.transport, "tcp or mem")->check(CLI::IsMember({"tcp", "mem"}));
    cmd->add_option("--dump-wire", o.dump_wire, "write raw frames to this file");
    cmd->add_option("--log", o.log_level, "off|error|warn|info|debug (overrides DXQ_LOG)");
    cmd->add_option("--config", o.config, "key=value file mirroring the flags");
}

void apply_log_level(const CommonOptions& o)
{
    if (o.log_level.empty())
        return;
    auto level = log::parse_level(o.log_level);
    if (!level)
        throw ConfigProblem("invalid log level '" + o.log_level + "'");
    log::set_level(*level);
}

struct MemXdp {
    NodeIdentifier identifier;
    std::string document_path;
    NodeName name;
};

/// `identifier,document,name`; the name comes last so it may hold commas.
MemXdp parse_mem_xdp(const std::string& spec)
{
    const auto first = spec.find(',');
    const auto second = first == std::string::npos ? std::string::npos : spec.find(',', first + 1);
    if (second == std::string::npos)
        throw ConfigProblem("--mem-xdp expects identifier,document,name");
    return {identifier_arg(spec.substr(0, first), "XDP"), spec.substr(first + 1, second - first - 1),
            name_arg(spec.substr(second + 1))};
}

/// XQD plus XDPs inside this process, joined and ready.
class MemNetwork {
public:
    MemNetwork(const NodeIdentifier& xqd, const std::vector<std::string>& specs)
    {
        node::XqdConfig cfg;
        cfg.self = xqd;
        cfg.name = NodeName::parse("XQD");
        cfg.ping_interval = std::chrono::milliseconds(0);
        xqd_ = std::make_unique<node::XqdNode>(cfg, network_);
        xqd_->start();
        for (const auto& spec : specs) {
            auto parsed = parse_mem_xdp(spec);
            node::XdpConfig x;
            x.self = parsed.identifier;
            x.name = parsed.name;
            x.xqd = xqd;
            x.document = load_document(parsed.document_path);
            x.max_join_attempts = 1;
            xdps_.push_back(std::make_unique<node::XdpNode>(x, network_));
        }
    }

    void join_all()
    {
        for (auto& x : xdps_) {
            x->start_listening();
            x->join();
        }
    }

    ~MemNetwork()
    {
        for (auto& x : xdps_)
            x->leave();
    }

    transport::MemoryNetwork& transport() { return network_; }

private:
    transport::MemoryNetwork network_;
    std::unique_ptr<node::XqdNode> xqd_;
    std::vector<std::unique_ptr<node::XdpNode>> xdps_;
};

void print_message(std::ostream& out, const Message& m)
{
    out << protocol::serialize_message(m, {.canonical_order = true});
}

int report_error(const Message& reply, Environment& env)
{
    env.err << "error " << reply.get(h::error_code).value_or("???");
    if (reply.body)
        env.err << ": " << *reply.body;
    env.err << '\n';
    return protocol_error;
}

} // namespace

std::optional<std::chrono::milliseconds> parse_duration(std::string_view text)
{
    if (text.empty())
        return std::nullopt;
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || value < 0)
        return std::nullopt;
    const std::string_view unit(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr));
    if (unit.empty() || unit == "s")
        return std::chrono::milliseconds(value * 1000);
    if (unit == "ms")
        return std::chrono::milliseconds(value);
    if (unit == "m")
        return std::chrono::milliseconds(value * 60'000);
    if (unit == "h")
        return std::chrono::milliseconds(value * 3'600'000);
    return std::nullopt;
}

int run(int argc, const char* const* argv, Environment& env)
{
    CLI::App app{"Distributed XML-Query Protocol nodes and client", "dxq"};
    app.require_subcommand(1);

    // xqd serve
    CommonOptions xqd_common;
    std::string xqd_listen, xqd_identifier, xqd_name = "XQD", xqd_admin;
    std::string xqd_ping = "15s", xqd_timeout = "5s", xqd_expiry = "120s";
    int xqd_misses = 3;
    std::optional<std::uint32_t> xqd_seed;
    auto* xqd = app.add_subcommand("xqd", "XML-Query Distributor")->require_subcommand(1);
    auto* xqd_serve = xqd->add_subcommand("serve", "run a distributor");
    xqd_serve->add_option("--listen", xqd_listen, "endpoint to bind, e.g. dxqp://0.0.0.0:8750/")->required();
    xqd_serve->add_option("--identifier", xqd_identifier, "advertised identifier (default: --listen)");
    xqd_serve->add_option("--name", xqd_name);
    xqd_serve->add_option("--admin", xqd_admin);
    xqd_serve->add_option("--ping-interval", xqd_ping);
    xqd_serve->add_option("--request-timeout", xqd_timeout);
    xqd_serve->add_option("--merge-expiry", xqd_expiry);
    xqd_serve->add_option("--misses", xqd_misses, "further missed pings before unregistering");
    xqd_serve->add_option("--seed", xqd_seed, "client identifier seed");
    add_common(xqd_serve, xqd_common);

    // xdp serve
    CommonOptions xdp_common;
    std::string xdp_listen, xdp_identifier, xdp_document, xdp_xqd, xdp_name, xdp_admin;
    std::string xdp_check = "30s", xdp_timeout = "10s";
    bool xdp_no_sign_off = false;
    auto* xdp = app.add_subcommand("xdp", "XML-Document Provider")->require_subcommand(1);
    auto* xdp_serve = xdp->add_subcommand("serve", "export a document");
    xdp_serve->add_option("--listen", xdp_listen)->required();
    xdp_serve->add_option("--identifier", xdp_identifier, "advertised identifier (default: --listen)");
    xdp_serve->add_option("--document", xdp_document)->required();
    xdp_serve->add_option("--xqd", xdp_xqd)->required();
    xdp_serve->add_option("--name", xdp_name)->required();
    xdp_serve->add_option("--admin", xdp_admin);
    xdp_serve->add_option("--self-check-interval", xdp_check);
    xdp_serve->add_option("--request-timeout", xdp_timeout);
    xdp_serve->add_flag("--no-sign-off", xdp_no_sign_off, "skip RMFROMDL when leaving");
    add_common(xdp_serve, xdp_common);

    // query
    CommonOptions query_common;
    std::string q_xqd, q_query, q_merge, q_merge_query, q_txn, q_output = "body", q_timeout = "30s";
    std::optional<int> q_depth;
    std::vector<std::string> q_mem_xdps;
    auto* query = app.add_subcommand("query", "run one query through an XQD");
    query->add_option("--xqd", q_xqd)->required();
    query->add_option("--query", q_query, "query file or -")->required();
    query->add_option("--merge", q_merge, "merge algorithm")->required();
    query->add_option("--merge-query", q_merge_query, "merge query file (user-defined)");
    query->add_option("--depth", q_depth, "depth (remove-duplicates)");
    query->add_option("--txn", q_txn, "Transaction-ID (default: random)");
    query->add_option("--output", q_output)->check(CLI::IsMember({"body", "full-message"}));
    query->add_option("--timeout", q_timeout);
    query->add_option("--mem-xdp", q_mem_xdps, "in-process XDP: identifier,document,name");
    add_common(query, query_common);

    // info
    CommonOptions info_common;
    std::string i_target, i_request, i_timeout = "10s";
    std::vector<std::string> i_mem_xdps;
    std::string i_mem_xqd;
    auto* info = app.add_subcommand("info", "send INFO-REQUEST to a node");
    info->add_option("--target", i_target)->required();
    info->add_option("--request", i_request, "INFO-NAMEs, * or empty")->required();
    info->add_option("--timeout", i_timeout);
    info->add_option("--mem-xqd", i_mem_xqd, "identifier of the in-process XQD");
    info->add_option("--mem-xdp", i_mem_xdps, "in-process XDP: identifier,document,name");
    add_common(info, info_common);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = merge_config(std::move(args));
    } catch (const ConfigProblem& e) {
        env.err << "dxq: " << e.what() << '\n';
        return config_error;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        env.out << app.help();
        return success;
    } catch (const CLI::CallForAllHelp&) {
        env.out << app.help("", CLI::AppFormatMode::All);
        return success;
    } catch (const CLI::ParseError& e) {
        env.err << "dxq: " << e.what() << '\n';
        return config_error;
    }

    try {
        if (*xqd_serve) {
            apply_log_level(xqd_common);
            if (xqd_common.transport != "tcp")
                throw ConfigProblem("serve commands need --transport tcp");
            auto listen = transport::Endpoint::parse(xqd_listen);
            node::XqdConfig cfg;
            cfg.self = identifier_arg(xqd_identifier.empty() ? xqd_listen : xqd_identifier, "XQD");
            cfg.name = name_arg(xqd_name);
            cfg.admin = xqd_admin;
            cfg.ping_interval = duration_arg(xqd_ping, "--ping-interval");
            cfg.request_timeout = duration_arg(xqd_timeout, "--request-timeout");
            cfg.merge_query_expiry = duration_arg(xqd_expiry, "--merge-expiry");
            cfg.unregister_after_misses = xqd_misses;
            cfg.identifier_seed = xqd_seed;

            transport::TcpTransport tcp;
            WireDump dump(xqd_common.dump_wire);
            dump.attach(tcp);
            node::XqdNode node(cfg, tcp);
            // Bind explicitly so 0.0.0.0 works while advertising another name.
            std::unique_ptr<transport::TcpListener> listener;
            try {
                listener = tcp.listen_at(listen, cfg.self, [&node](const Message& m) { return node.handle(m); });
            } catch (const transport::BindError& e) {
                env.err << "dxq: " << e.what() << '\n';
                return config_error;
            }
            std::atomic<bool> stop{false};
            std::thread sweeper([&] {
                const auto slice = std::chrono::milliseconds(50);
                auto next = std::chrono::steady_clock::now() + cfg.ping_interval;
                while (!stop.load()) {
                    std::this_thread::sleep_for(slice);
                    if (cfg.ping_interval.count() > 0 && std::chrono::steady_clock::now() >= next) {
                        node.connectivity_sweep();
                        next = std::chrono::steady_clock::now() + cfg.ping_interval;
                    }
                }
            });
            log::write(log::Level::info, "serving",
                       {{"role", "xqd"}, {"listen", listen.to_string()}, {"identifier", cfg.self.str()},
                        {"port", std::to_string(listener->port())}});
            if (env.on_ready)
                env.on_ready();
            env.wait_for_shutdown();
            stop = true;
            sweeper.join();
            listener->stop();
            return success;
        }

        if (*xdp_serve) {
            apply_log_level(xdp_common);
            if (xdp_common.transport != "tcp")
                throw ConfigProblem("serve commands need --transport tcp");
            auto listen = transport::Endpoint::parse(xdp_listen);
            node::XdpConfig cfg;
            cfg.self = identifier_arg(xdp_identifier.empty() ? xdp_listen : xdp_identifier, "XDP");
            cfg.xqd = identifier_arg(xdp_xqd, "XQD");
            cfg.name = name_arg(xdp_name);
            cfg.admin = xdp_admin;
            cfg.document = load_document(xdp_document);
            cfg.self_check_interval = duration_arg(xdp_check, "--self-check-interval");
            cfg.request_timeout = duration_arg(xdp_timeout, "--request-timeout");
            cfg.sign_off_before_unregister = !xdp_no_sign_off;

            transport::TcpTransport tcp;
            WireDump dump(xdp_common.dump_wire);
            dump.attach(tcp);
            node::XdpNode node(cfg, tcp);
            std::unique_ptr<transport::TcpListener> listener;
            try {
                listener = tcp.listen_at(listen, cfg.self, [&node](const Message& m) { return node.handle(m); });
            } catch (const transport::BindError& e) {
                env.err << "dxq: " << e.what() << '\n';
                return config_error;
            }
            std::thread session([&node] { node.run(); });
            log::write(log::Level::info, "serving",
                       {{"role", "xdp"}, {"listen", listen.to_string()}, {"identifier", cfg.self.str()},
                        {"port", std::to_string(listener->port())}});
            if (env.on_ready)
                env.on_ready();
            env.wait_for_shutdown();
            node.request_stop();
            session.join();
            listener->stop();
            return success;
        }

        if (*query) {
            apply_log_level(query_common);
            node::QueryRequest request;
            request.algorithm = q_merge;
            request.query = read_query_file(q_query);
            request.transaction_id = q_txn.empty() ? node::Client::random_transaction_id() : q_txn;
            request.depth = q_depth;
            if (q_merge == merge::user_defined) {
                if (q_merge_query.empty())
                    throw ConfigProblem("--merge-query is required with user-defined");
                request.merge_query = read_query_file(q_merge_query);
            } else if (!q_merge_query.empty()) {
                throw ConfigProblem("--merge-query only applies to user-defined");
            }
            if (q_merge == merge::remove_duplicates && !q_depth)
                throw ConfigProblem("--depth is required with remove-duplicates");
            const auto xqd_id = identifier_arg(q_xqd, "XQD");
            const auto timeout = duration_arg(q_timeout, "--timeout");

            WireDump dump(query_common.dump_wire);
            std::unique_ptr<transport::Transport> tcp;
            std::unique_ptr<MemNetwork> mem;
            transport::Transport* transport = nullptr;
            if (query_common.transport == "mem") {
                mem = std::make_unique<MemNetwork>(xqd_id, q_mem_xdps);
                transport = &mem->transport();
            } else {
                if (!q_mem_xdps.empty())
                    throw ConfigProblem("--mem-xdp needs --transport mem");
                tcp = std::make_unique<transport::TcpTransport>();
                transport = tcp.get();
            }
            dump.attach(*transport);
            if (mem)
                mem->join_all();

            node::Client client(*transport, xqd_id, timeout);
            node::QueryOutcome outcome;
            try {
                outcome = client.run(request);
            } catch (const transport::TransportError& e) {
                env.err << "dxq: transport failure (" << transport::to_string(e.kind()) << "): " << e.what() << '\n';
                return transport_failure;
            }
            if (q_output == "full-message") {
                for (const auto& m : outcome.exchange)
                    print_message(env.out, m);
            }
            if (!outcome.ok())
                return report_error(outcome.final, env);
            if (q_output == "body")
                env.out << outcome.final.body.value_or("") << '\n';
            env.err << outcome.final.get(h::result_sources).value_or("") << '\n';
            return success;
        }

        if (*info) {
            apply_log_level(info_common);
            const auto target = identifier_arg(i_target, "target");
            const auto timeout = duration_arg(i_timeout, "--timeout");
            WireDump dump(info_common.dump_wire);
            std::unique_ptr<transport::Transport> tcp;
            std::unique_ptr<MemNetwork> mem;
            transport::Transport* transport = nullptr;
            if (info_common.transport == "mem") {
                mem = std::make_unique<MemNetwork>(identifier_arg(i_mem_xqd.empty() ? i_target : i_mem_xqd, "XQD"),
                                                   i_mem_xdps);
                transport = &mem->transport();
            } else {
                tcp = std::make_unique<transport::TcpTransport>();
                transport = tcp.get();
            }
            dump.attach(*transport);
            if (mem)
                mem->join_all();

            node::Client client(*transport, target, timeout);
            Message reply;
            try {
                reply = client.info(target, i_request);
            } catch (const transport::TransportError& e) {
                env.err << "dxq: transport failure (" << transport::to_string(e.kind()) << "): " << e.what() << '\n';
                return transport_failure;
            }
            if (reply.type == MessageType::error)
                return report_error(reply, env);
            if (reply.type != MessageType::info_reply) {
                env.err << "dxq: unexpected " << protocol::to_string(reply.type) << '\n';
                return protocol_error;
            }
            for (const auto& var : reply.headers) {
                if (!node::is_reserved_info_name(var.name))
                    env.out << var.name << '\t' << var.value << '\n';
            }
            return success;
        }
    } catch (const ConfigProblem& e) {
        env.err << "dxq: " << e.what() << '\n';
        return config_error;
    } catch (const std::invalid_argument& e) {
        env.err << "dxq: " << e.what() << '\n';
        return config_error;
    } catch (const protocol::ProtocolError& e) {
        env.err << "dxq: " << e.what() << '\n';
        return config_error;
    }
    return config_error;
}

} // namespace dxq::cli
