// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails.

#include "example_exchange.hpp"
#include "gen.hpp"
#include "network.hpp"
#include "oracles.hpp"

#include "dxq/node/log.hpp"
#include "dxq/protocol/lists.hpp"
#include "dxq/transport/framing.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

using namespace dxq;
using namespace dxq::protocol;
using dxq::testing::id;
using dxq::testing::name;
namespace example = dxq::testing::example;

namespace {

using Clock = std::chrono::steady_clock;

struct Failed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what)
{
    if (!condition)
        throw Failed(what);
}

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void criterion(int number, const char* title, const std::function<std::string()>& check)
{
    std::string detail;
    bool ok = false;
    try {
        detail = check();
        ok = true;
    } catch (const std::exception& e) {
        detail = e.what();
    }
    if (!ok)
        ++failures;
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", number, title, detail.c_str());
    std::fflush(stdout);
}

// XQD plus providers on one memory network with per-provider services.
struct Federation {
    struct Provider {
        std::string identifier;
        std::string name;
        std::string document;
        const query::QueryProcessor* processor = nullptr;
    };

    transport::MemoryNetwork net;
    node::ManualClock clock;
    std::unique_ptr<node::XqdNode> xqd;
    std::vector<std::unique_ptr<node::XdpNode>> xdps;
    NodeIdentifier xqd_id = id("dxqp://xqd.test:8750/");

    explicit Federation(const std::vector<Provider>& providers, bool parallel = false)
    {
        node::XqdConfig cfg;
        cfg.self = xqd_id;
        cfg.name = name("XQD");
        cfg.ping_interval = std::chrono::milliseconds(0);
        cfg.parallel_fanout = parallel;
        node::XqdServices services;
        services.clock = &clock;
        xqd = std::make_unique<node::XqdNode>(cfg, net, services);
        xqd->start();
        for (const auto& p : providers) {
            node::XdpConfig x;
            x.self = id(p.identifier);
            x.name = name(p.name);
            x.xqd = xqd_id;
            x.document = xml::parse(p.document);
            x.max_join_attempts = 1;
            node::XdpServices xs;
            xs.processor = p.processor;
            xs.sleeper = [](std::chrono::milliseconds) { return true; };
            xdps.push_back(std::make_unique<node::XdpNode>(x, net, xs));
            xdps.back()->start_listening();
            require(xdps.back()->join().phase == node::XdpPhase::in_distribution_list, "join failed");
        }
    }

    ~Federation() { xqd->stop(); }

    node::QueryOutcome run(const node::QueryRequest& r)
    {
        node::Client client(net, xqd_id);
        return client.run(r);
    }
};

class FailingProcessor final : public query::QueryProcessor {
public:
    std::string execute(std::string_view, const xml::Node&) const override
    {
        throw query::QueryError("forced failure");
    }
};

std::string c1_golden()
{
    const auto start = Clock::now();
    const auto expected = example::transcript();
    const auto actual = dxq::testing::play_example_exchange();
    const double elapsed = seconds_since(start);
    require(actual.size() == expected.size(),
            "frame count " + std::to_string(actual.size()) + " != " + std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto a = parse_message(actual[i]);
        const auto e = parse_message(expected[i]);
        require(a.body == e.body, "frame " + std::to_string(i) + " body differs");
        require(a.get(header::content_length) == e.get(header::content_length),
                "frame " + std::to_string(i) + " Content-Length differs");
        auto canonical = a;
        canonicalize_headers(canonical);
        require(canonical == e, "frame " + std::to_string(i) + " headers differ");
        require(actual[i] == expected[i], "frame " + std::to_string(i) + " not in canonical order");
    }
    std::vector<std::string> lengths;
    for (const auto& f : actual) {
        if (auto cl = parse_message(f).get(header::content_length))
            lengths.push_back(*cl);
    }
    for (auto want : {"23", "8", "51", "9"})
        require(std::find(lengths.begin(), lengths.end(), want) != lengths.end(), std::string("no CL ") + want);
    const auto assigned = parse_message(actual[13]).to().str();
    require(assigned.rfind("http://", 0) == 0 &&
                assigned.find_first_not_of("0123456789abcdef", 7) == std::string::npos && assigned.size() > 7,
            "assigned identifier " + assigned);
    require(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu frames byte-exact, CL 23/8/51/9, id %s, %.3f s < 5 s", actual.size(),
                  assigned.c_str(), elapsed);
    return buf;
}

std::string c2_merged_sum()
{
    Federation f({{std::string(example::physnet), "PhysNet", std::string(example::document)},
                  {std::string(example::mirror), "PhysNet (Mirror)", std::string(example::document)}});
    auto outcome = f.run({"0", "user-defined", std::string(example::query), std::nullopt, std::string(example::merge_query)});
    require(outcome.ok(), "final message is not a merged result");
    require(*outcome.final.body == "<a>10</a>", "got '" + *outcome.final.body + "'");
    return "user-defined merge yields <a>10</a> exactly";
}

std::string c3_remove_duplicates()
{
    Federation f({{"dxqp://a.test:1/", "A", dxq::testing::solarsystem_a},
                  {"dxqp://b.test:1/", "B", dxq::testing::solarsystem_b}});
    auto outcome = f.run({"s", "remove-duplicates", ".", 2, std::nullopt});
    require(outcome.ok(), "no merged result");
    const auto oracle = dxq::testing::dedup_oracle(
        {xml::parse(dxq::testing::solarsystem_a), xml::parse(dxq::testing::solarsystem_b)}, 2);
    require(*outcome.final.body == oracle, "differs from oracle: " + *outcome.final.body);
    auto merged = xml::parse(*outcome.final.body);
    require(merged.children().size() == 1 && merged.children()[0].name() == "planets", "one planets element");
    std::vector<std::string> planets;
    for (const auto& p : merged.children()[0].children())
        planets.push_back(p.string_value());
    require(planets == std::vector<std::string>{"Mercury", "Venus", "Earth", "Mars"}, "planet order");
    return "planets = Mercury, Venus, Earth, Mars; equals brute-force oracle";
}

// Mutations of a valid frame with the code the grammar mandates, if known.
struct Mutation {
    std::string bytes;
    std::optional<int> expected; // nullopt: parse or 100/102
};

Mutation mutate(dxq::testing::Gen& gen, const Message& m)
{
    const auto wire = serialize_message(m);
    const auto header_end = wire.find("\r\n\r\n");
    switch (gen.between(0, 6)) {
    case 0: { // drop Msg-From or Msg-To
        const std::string which = gen.chance(0.5) ? "Msg-From" : "Msg-To";
        const auto pos = wire.find("\r\n" + which + ":");
        const auto end = wire.find("\r\n", pos + 2);
        return {wire.substr(0, pos) + wire.substr(end), 102};
    }
    case 1: { // break the ID line
        auto out = wire;
        out[gen.between(0, 7)] = gen.chance(0.5) ? 'x' : ' ';
        return {out, 100};
    }
    case 2: { // header line without ':'
        return {wire.substr(0, header_end) + "\r\nNoColonHere" + wire.substr(header_end), 100};
    }
    case 3: { // body longer than declared / shorter than declared
        if (m.body && !m.body->empty())
            return {wire + "X", 100};
        return {wire + "stray", 100};
    }
    case 4: { // truncate
        return {wire.substr(0, static_cast<std::size_t>(gen.between(0, static_cast<int>(wire.size()) - 1))), std::nullopt};
    }
    case 5: { // flip one byte anywhere
        auto out = wire;
        out[static_cast<std::size_t>(gen.between(0, static_cast<int>(out.size()) - 1))] =
            static_cast<char>(gen.between(0, 255));
        return {out, std::nullopt};
    }
    default: { // invalid UTF-8 in a header value
        return {wire.substr(0, header_end) + "\r\nX-Bad: \xc3\x28" + wire.substr(header_end), 100};
    }
    }
}

std::string c4_grammar()
{
    const auto start = Clock::now();
    dxq::testing::Gen gen(20240601);
    const int n = 10'000;

    for (int i = 0; i < n; ++i) {
        auto m = gen.message();
        const auto wire = serialize_message(m);
        const auto back = parse_message(wire);
        require(back == m, "round-trip changed message " + std::to_string(i));
        require(serialize_message(back) == wire, "re-serialization differs " + std::to_string(i));
    }

    int parsed = 0, rejected = 0;
    for (int i = 0; i < n; ++i) {
        const auto mutation = mutate(gen, gen.message());
        try {
            parse_message(mutation.bytes);
            require(!mutation.expected, "mutation " + std::to_string(i) + " parsed but must fail");
            ++parsed;
        } catch (const ProtocolError& e) {
            const int code = e.code().value;
            if (mutation.expected)
                require(code == *mutation.expected, "mutation " + std::to_string(i) + " gave " + std::to_string(code));
            else
                require(code == 100 || code == 102, "mutation " + std::to_string(i) + " gave " + std::to_string(code));
            ++rejected;
        }
    }

    // Missing body on XML-QUERY: 103 from a provider and from the distributor.
    Federation f({{"dxqp://a.test:1/", "A", std::string(example::document)}});
    int missing_content = 0;
    for (int i = 0; i < 100; ++i) {
        for (const auto& target : {id("dxqp://a.test:1/"), f.xqd_id}) {
            Message q(MessageType::xml_query, id("dxqp://c.test:1/"), target);
            q.set(header::transaction_id, "t" + std::to_string(i));
            q.set(header::merge_algorithm, "concatenate");
            if (gen.chance(0.5))
                q.set_body("");
            auto reply = f.net.request(target, q);
            require(reply.type == MessageType::error && error_code_of(reply) == error_code::missing_content,
                    "missing body not answered with 103");
            ++missing_content;
        }
    }

    int split_frames = 0;
    for (int round = 0; round < 1'000; ++round) {
        std::vector<std::string> frames;
        std::string stream;
        for (int i = gen.between(1, 10); i > 0; --i) {
            frames.push_back(serialize_message(gen.message()));
            stream += frames.back();
        }
        transport::FrameAssembler assembler;
        std::vector<std::string> got;
        for (std::size_t pos = 0; pos < stream.size();) {
            const auto len = std::min<std::size_t>(stream.size() - pos, static_cast<std::size_t>(gen.between(1, 97)));
            assembler.feed(std::string_view(stream).substr(pos, len));
            pos += len;
            while (auto frame = assembler.next())
                got.push_back(*frame);
        }
        require(got == frames && assembler.idle(), "split fuzz lost or duplicated frames");
        std::istringstream in(stream);
        for (const auto& expected : frames)
            require(transport::read_frame(in) == expected, "stream reader lost a frame");
        require(!transport::read_frame(in), "stream reader invented a frame");
        split_frames += static_cast<int>(frames.size());
    }

    const double elapsed = seconds_since(start);
    require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d round-trips, %d mutations (%d parsed, %d rejected), %d x 103, %d split frames, %.2f s < 60 s",
                  n, n, parsed, rejected, missing_content, split_frames, elapsed);
    return buf;
}

std::string c5_error_codes()
{
    dxq::testing::TestNetwork empty({});
    dxq::testing::Recorder empty_rec;
    empty_rec.attach(empty.net);
    const auto xqd = empty.xqd->config().self;
    const auto client = id("http://client.test/");
    auto q = [&](std::string_view alg, std::optional<std::string> body, std::string txn = "1") {
        Message m(MessageType::xml_query, client, xqd);
        if (!alg.empty())
            m.set(header::merge_algorithm, std::string(alg));
        m.set(header::transaction_id, std::move(txn));
        if (body)
            m.set_body(*body);
        return m;
    };
    empty.net.request(xqd, q("concatenate", std::string(example::query)));       // 400

    dxq::testing::TestNetwork n(dxq::testing::TestNetwork::example_xdps());
    n.join_all();
    dxq::testing::Recorder rec;
    rec.attach(n.net);
    n.net.request(xqd, q("concatenate", std::string(example::query), "a b"));    // 100
    Message merge(MessageType::merge_algorithm, client, xqd);
    merge.set(header::transaction_id, "nope");
    merge.set_body("./result");
    n.net.request(xqd, merge);                                                   // 101
    n.net.request(xqd, q("", std::string(example::query)));                      // 102
    n.net.request(xqd, q("concatenate", std::nullopt));                          // 103
    n.net.request(xqd, q("concatenate", std::string("let $a := ./a return $b"))); // 200 from XDPs, 500 to client
    n.net.request(xqd, q("intersect", std::string(example::query)));             // 300

    std::map<int, int> seen;
    std::map<int, bool> body_matches;
    for (const auto* r : {&rec, &empty_rec}) {
        for (const auto& f : r->frames()) {
            auto m = parse_message(f);
            if (m.type != MessageType::error)
                continue;
            const int code = error_code_of(m).value;
            ++seen[code];
            if (code == 102)
                body_matches[102] = body_matches[102] || m.body == "Merge-Algorithm";
            if (code == 200)
                body_matches[200] = body_matches[200] || m.body == "unbound variable $b";
            if (code == 400)
                body_matches[400] = !m.body.has_value();
        }
    }
    std::string list;
    for (int code : {100, 101, 102, 103, 200, 300, 400, 500}) {
        require(seen[code] > 0, "code " + std::to_string(code) + " never on the wire");
        list += std::to_string(code) + " ";
    }
    require(body_matches[102] && body_matches[200] && body_matches[400], "error bodies do not match their meaning");
    return "on the wire: " + list + "with expected details";
}

std::string c6_lifecycle()
{
    dxq::testing::TestNetwork n(dxq::testing::TestNetwork::example_xdps());
    n.join_all();
    const auto mirror = id(example::mirror);
    const auto interval = std::chrono::seconds(15);
    n.net.set_fault(mirror, transport::Fault::silent);

    n.clock.advance(interval);
    auto report = n.xqd->connectivity_sweep();
    require(report.removed_from_dl.size() == 1 && report.removed_from_dl[0].identifier == mirror,
            "not removed from DL after one missed ping");
    require(n.xqd->registry().size() == 2, "unregistered too early");
    int further = 0;
    for (; further < 10; ++further) {
        n.clock.advance(interval);
        if (!n.xqd->connectivity_sweep().unregistered.empty())
            break;
    }
    ++further;
    require(further == 3, "unregistered after " + std::to_string(further) + " further misses");
    require(n.xqd->registry().size() == 1, "still registered");

    n.net.clear_faults();
    auto check = n.xdps[1]->self_check();
    require(check.observed == node::XdpPhase::unregistered && check.rejoined, "self-check did not re-join");

    Message info(MessageType::info_request, id("http://client.test/"), n.xqd->config().self);
    info.set(header::request, "Active-XDPs");
    auto reply = n.net.request(n.xqd->config().self, info);
    bool listed = false;
    for (const auto& spec : parse_xdp_spec_list(reply.get("Active-XDPs").value_or("")))
        listed = listed || (spec.identifier == mirror && spec.name.str() == "PhysNet (Mirror)");
    require(listed, "not back in Active-XDPs");
    return "DL removal after 1 miss, unregistered after 3 further misses, self-check re-join, listed in Active-XDPs";
}

std::string c7_partial_failure()
{
    FailingProcessor failing;
    const std::string doc(example::document);
    {
        Federation f({{"dxqp://good.test:1/", "Good", doc}, {"dxqp://bad.test:1/", "Bad", doc, &failing}});
        dxq::testing::Recorder rec;
        rec.attach(f.net);
        auto outcome = f.run({"p", "concatenate", std::string(example::query), std::nullopt, std::nullopt});
        require(outcome.ok(), "client did not get a merged result");
        require(*outcome.final.body == "<result><a>5</a></result>", "merged body " + *outcome.final.body);
        require(outcome.final.get(header::result_sources) == "{Good}", "Result-Sources lists more than the survivor");
        bool saw_200 = false;
        for (const auto& frame : rec.frames()) {
            auto m = parse_message(frame);
            saw_200 = saw_200 || (m.type == MessageType::error && m.from() == id("dxqp://bad.test:1/") &&
                                  error_code_of(m) == error_code::query_processor);
        }
        require(saw_200, "failing XDP did not answer ERROR 200");
    }
    Federation f({{"dxqp://bad1.test:1/", "Bad1", doc, &failing}, {"dxqp://bad2.test:1/", "Bad2", doc, &failing}});
    auto outcome = f.run({"p", "concatenate", std::string(example::query), std::nullopt, std::nullopt});
    require(outcome.final.type == MessageType::error, "both failing but no ERROR");
    return "survivor-only result with Result-Sources {Good}; both failing gives ERROR " +
           error_code_of(outcome.final).to_string();
}

std::string c8_concurrency()
{
    const std::vector<Federation::Provider> providers = {
        {"dxqp://p0.test:1/", "P0", "<sky><planets><planet>Mercury</planet><planet>Venus</planet></planets><n>1</n></sky>"},
        {"dxqp://p1.test:1/", "P1", "<sky><planets><planet>Venus</planet><planet>Earth</planet></planets><n>2</n></sky>"},
        {"dxqp://p2.test:1/", "P2", "<sky><planets><planet>Earth</planet><planet>Mars</planet></planets><n>3</n></sky>"},
        {"dxqp://p3.test:1/", "P3", "<sky><planets><planet>Jupiter</planet></planets><n>4.5</n></sky>"},
    };
    std::vector<node::QueryRequest> requests;
    for (int i = 0; i < 32; ++i) {
        const auto txn = "c" + std::to_string(i);
        switch (i % 4) {
        case 0: requests.push_back({txn, "concatenate", "./planets/planet", std::nullopt, std::nullopt}); break;
        case 1: requests.push_back({txn, "remove-duplicates", ".", 1 + (i / 4) % 3, std::nullopt}); break;
        case 2: requests.push_back({txn, "user-defined", "./n", std::nullopt, "<t>{sum(./result/xqres/n)}</t>"}); break;
        default: requests.push_back({txn, "concatenate", i % 8 == 3 ? "./n" : "<k>{sum(./n)}</k>", std::nullopt, std::nullopt}); break;
        }
    }

    std::vector<std::string> serial;
    {
        Federation f(providers);
        for (const auto& r : requests) {
            auto o = f.run(r);
            serial.push_back(std::string(to_string(o.final.type)) + "|" + o.final.body.value_or("") + "|" +
                             o.final.get(header::result_sources).value_or(""));
        }
    }

    Federation f(providers, true);
    dxq::testing::Recorder rec;
    rec.attach(f.net);
    std::vector<std::string> concurrent(requests.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        threads.emplace_back([&, i] {
            try {
                auto o = f.run(requests[i]);
                concurrent[i] = std::string(to_string(o.final.type)) + "|" + o.final.body.value_or("") + "|" +
                                o.final.get(header::result_sources).value_or("");
            } catch (const std::exception& e) {
                concurrent[i] = std::string("exception: ") + e.what();
            }
        });
    }
    for (auto& t : threads)
        t.join();
    for (std::size_t i = 0; i < requests.size(); ++i)
        require(concurrent[i] == serial[i], "transaction " + std::to_string(i) + " differs: " + concurrent[i]);

    std::set<std::string> sub_ids;
    std::size_t fanned = 0;
    for (const auto& frame : rec.frames()) {
        auto m = parse_message(frame);
        if (m.type == MessageType::xml_query && m.from() == f.xqd_id) {
            ++fanned;
            sub_ids.insert(*m.get(header::transaction_id));
        }
    }
    require(fanned == requests.size() * providers.size(), "fan-out count " + std::to_string(fanned));
    require(sub_ids.size() == fanned, "sub-transaction id collision");
    require(f.xqd->open_transactions() == 0, "transactions left open");
    return "32 mixed transactions x 4 XDPs equal serial results; " + std::to_string(fanned) +
           " sub-transaction ids, all distinct";
}

} // namespace

int main()
{
    dxq::log::set_level(dxq::log::Level::off);
    criterion(1, "golden transcript", c1_golden);
    criterion(2, "merged sum", c2_merged_sum);
    criterion(3, "remove-duplicates", c3_remove_duplicates);
    criterion(4, "grammar properties", c4_grammar);
    criterion(5, "error codes", c5_error_codes);
    criterion(6, "lifecycle", c6_lifecycle);
    criterion(7, "partial failure", c7_partial_failure);
    criterion(8, "concurrency", c8_concurrency);
    return failures == 0 ? 0 : 1;
}
