#include "dxq/node/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace dxq::log {

namespace {

Level initial_level()
{
    const char* env = std::getenv("DXQ_LOG");
    if (!env)
        return Level::warn;
    return parse_level(env).value_or(Level::warn);
}

std::atomic<Level>& current()
{
    static std::atomic<Level> value{initial_level()};
    return value;
}

std::mutex& sink_mutex()
{
    static std::mutex m;
    return m;
}

Sink& sink()
{
    static Sink s;
    return s;
}

std::string_view level_name(Level level)
{
    switch (level) {
    case Level::off: return "off";
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
    }
    return "?";
}

void append_value(std::string& out, std::string_view value)
{
    const bool quote = value.empty() || value.find_first_of(" \t\"=\\\r\n") != std::string_view::npos;
    if (!quote) {
        out += value;
        return;
    }
    out += '"';
    for (char c : value) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\r': out += "\\r"; break;
        case '\n': out += "\\n"; break;
        default: out += c;
        }
    }
    out += '"';
}

} // namespace

std::optional<Level> parse_level(std::string_view text)
{
    for (auto l : {Level::off, Level::error, Level::warn, Level::info, Level::debug}) {
        if (level_name(l) == text)
            return l;
    }
    return std::nullopt;
}

Level level() { return current().load(); }
void set_level(Level level) { current().store(level); }
bool enabled(Level l) { return l != Level::off && static_cast<int>(l) <= static_cast<int>(level()); }

void set_sink(Sink s)
{
    std::lock_guard lock(sink_mutex());
    sink() = std::move(s);
}

void write(Level l, std::string_view event, std::initializer_list<Field> fields)
{
    if (!enabled(l))
        return;
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    std::string line = "ts=" + std::to_string(ms) + " level=";
    line += level_name(l);
    line += " event=";
    line += event;
    for (const auto& [key, value] : fields) {
        line += ' ';
        line += key;
        line += '=';
        append_value(line, value);
    }
    std::lock_guard lock(sink_mutex());
    if (sink())
        sink()(line);
    else
        std::cerr << line << '\n';
}

void exchange(std::string_view node, const protocol::Message& request, const protocol::Message& response)
{
    if (!enabled(Level::info))
        return;
    namespace h = protocol::header;
    const auto code = response.type == protocol::MessageType::error ? response.get(h::error_code).value_or("") : "";
    write(Level::info, "exchange",
          {{"node", std::string(node)},
           {"request", std::string(protocol::to_string(request.type))},
           {"response", std::string(protocol::to_string(response.type))},
           {"from", request.get(h::msg_from).value_or("")},
           {"to", request.get(h::msg_to).value_or("")},
           {"txn", request.get(h::transaction_id).value_or("")},
           {"code", code}});
}

} // namespace dxq::log
