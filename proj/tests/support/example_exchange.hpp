#pragma once

// The example DXQ-Network exchange: one XQD, two XDPs exporting
// <document><a>5</a></document>, one client. The assigned client
// identifier appears here as produced by seed 0xa6bf278d.

#include <initializer_list>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace dxq::testing::example {

inline constexpr std::string_view xqd = "http://metasearch.isn-oldenburg.de/dxq-xqd/";
inline constexpr std::string_view physnet = "http://physnet.isn-oldenburg.de/dxq-xdp/";
inline constexpr std::string_view mirror = "http://physnet-mirror.isn-oldenburg.de:8080/dxq-xdp/";
inline constexpr std::string_view client = "http://a6bf278d";
inline constexpr unsigned client_seed = 0xa6bf278d;

inline constexpr std::string_view physnet_name = "PhysNet";
inline constexpr std::string_view mirror_name = "PhysNet (Mirror)";
inline constexpr std::string_view physnet_admin = "Max Mustermann <admin@physnet.isn-oldenburg.de>";
inline constexpr std::string_view mirror_admin = "Bert Beispiel <admin@physnet-mirror.isn-oldenburg.de>";

inline constexpr std::string_view document = "<document><a>5</a></document>";
inline constexpr std::string_view query = "let $a := ./a return $a";
inline constexpr std::string_view merge_query = "let $r := <a>{sum(./result/xqres/a)}</a> return $r";
// The merge query text is 50 bytes but its frame declares 51; the extra
// byte is a trailing line feed.
inline constexpr std::string_view merge_query_on_wire = "let $r := <a>{sum(./result/xqres/a)}</a> return $r\n";

inline std::string frame(std::initializer_list<std::string_view> lines, std::string_view body = {})
{
    std::string out;
    for (auto line : lines) {
        out += line;
        out += "\r\n";
    }
    out += "\r\n";
    out += body;
    return out;
}

inline std::string var(std::string_view name, std::string_view value)
{
    return std::string(name) + ": " + std::string(value);
}

inline std::vector<std::string> transcript()
{
    const auto from = [](std::string_view v) { return var("Msg-From", v); };
    const auto to = [](std::string_view v) { return var("Msg-To", v); };
    std::vector<std::string> t;

    for (auto [xdp, name] : {std::pair{physnet, physnet_name}, std::pair{mirror, mirror_name}}) {
        t.push_back(frame({"DXQP-1.0 REGISTER", from(xdp), to(xqd), var("Node-Name", name)}));
        t.push_back(frame({"DXQP-1.0 OK", from(xqd), to(xdp)}));
        t.push_back(frame({"DXQP-1.0 ADDTODL", from(xdp), to(xqd)}));
        t.push_back(frame({"DXQP-1.0 OK", from(xqd), to(xdp)}));
    }

    for (auto [xdp, name, admin] : {std::tuple{physnet, physnet_name, physnet_admin},
                                    std::tuple{mirror, mirror_name, mirror_admin}}) {
        t.push_back(frame({"DXQP-1.0 INFO-REQUEST", from(xqd), to(xdp), "Request: Node-Name Admin"}));
        t.push_back(frame({"DXQP-1.0 INFO-REPLY", from(xdp), to(xqd), var("Node-Name", name), var("Admin", admin)}));
    }

    t.push_back(frame({"DXQP-1.0 XML-QUERY", "Msg-From: ", to(xqd), "Transaction-ID: 0",
                       "Merge-Algorithm: user-defined", "Content-Length: 23"},
                      query));
    t.push_back(frame({"DXQP-1.0 OK", from(xqd), to(client), "Transaction-ID: 0"}));

    t.push_back(frame({"DXQP-1.0 XML-QUERY", from(xqd), to(physnet), "Transaction-ID: 0", "Content-Length: 23"}, query));
    t.push_back(frame({"DXQP-1.0 XML-QUERY-RESULT", from(physnet), to(xqd), "Transaction-ID: 0", "Content-Length: 8"},
                      "<a>5</a>"));
    t.push_back(frame({"DXQP-1.0 XML-QUERY", from(xqd), to(mirror), "Transaction-ID: 1", "Content-Length: 23"}, query));
    t.push_back(frame({"DXQP-1.0 XML-QUERY-RESULT", from(mirror), to(xqd), "Transaction-ID: 1", "Content-Length: 8"},
                      "<a>5</a>"));

    t.push_back(frame({"DXQP-1.0 MERGE-ALGORITHM", from(client), to(xqd), "Transaction-ID: 0", "Content-Length: 51"},
                      merge_query_on_wire));
    t.push_back(frame({"DXQP-1.0 XML-QUERY-MERGED-RESULT", from(xqd), to(client), "Transaction-ID: 0",
                       "Result-Sources: {PhysNet} {PhysNet (Mirror)}", "Content-Length: 9"},
                      "<a>10</a>"));

    for (auto xdp : {physnet, mirror}) {
        t.push_back(frame({"DXQP-1.0 UNREGISTER", from(xdp), to(xqd)}));
        t.push_back(frame({"DXQP-1.0 OK", from(xqd), to(xdp)}));
    }
    return t;
}

} // namespace dxq::testing::example
