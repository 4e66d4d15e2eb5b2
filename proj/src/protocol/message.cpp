#include "dxq/protocol/message.hpp"

#include "dxq/protocol/utf8.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

namespace dxq::protocol {

namespace {

constexpr std::string_view crlf = "\r\n";
constexpr std::string_view header_end = "\r\n\r\n";

struct TypeToken {
    MessageType type;
    std::string_view token;
};

constexpr std::array<TypeToken, 12> type_tokens{{
    {MessageType::ok, "OK"},
    {MessageType::error, "ERROR"},
    {MessageType::xml_query, "XML-QUERY"},
    {MessageType::merge_algorithm, "MERGE-ALGORITHM"},
    {MessageType::xml_query_result, "XML-QUERY-RESULT"},
    {MessageType::xml_query_merged_result, "XML-QUERY-MERGED-RESULT"},
    {MessageType::register_node, "REGISTER"},
    {MessageType::unregister_node, "UNREGISTER"},
    {MessageType::add_to_dl, "ADDTODL"},
    {MessageType::rm_from_dl, "RMFROMDL"},
    {MessageType::info_request, "INFO-REQUEST"},
    {MessageType::info_reply, "INFO-REPLY"},
}};

bool is_vname(std::string_view name)
{
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '-';
    });
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

/// Value of a positive decimal integer, nullopt when the text is not one.
/// Values beyond size_t saturate.
std::optional<std::size_t> positive_integer(std::string_view text)
{
    if (text.empty() || !std::all_of(text.begin(), text.end(), is_digit))
        return std::nullopt;
    std::size_t value = 0;
    constexpr auto max = std::numeric_limits<std::size_t>::max();
    for (char c : text) {
        const auto digit = static_cast<std::size_t>(c - '0');
        value = value > (max - digit) / 10 ? max : value * 10 + digit;
    }
    if (value == 0)
        return std::nullopt;
    return value;
}

[[noreturn]] void invalid(const std::string& what)
{
    throw ProtocolError(error_code::invalid_message, what);
}

/// Splits a header line into name and value per `VNAME ":" (" ")+ VVALUE`.
HeaderVariable split_header_line(std::string_view line)
{
    const auto colon = line.find(':');
    if (colon == std::string_view::npos)
        invalid("header line without ':'");
    const auto name = line.substr(0, colon);
    if (!is_vname(name))
        invalid("invalid header variable name '" + std::string(name) + "'");
    auto rest = line.substr(colon + 1);
    if (rest.empty() || rest.front() != ' ')
        invalid("missing space after '" + std::string(name) + ":'");
    const auto first = rest.find_first_not_of(' ');
    rest = first == std::string_view::npos ? std::string_view{} : rest.substr(first);
    return {std::string(name), std::string(rest)};
}

std::pair<Version, MessageType> parse_id_line(std::string_view line)
{
    constexpr std::string_view prefix = "DXQP-";
    if (line.size() < prefix.size() + 5 || line.substr(0, prefix.size()) != prefix)
        invalid("malformed ID-LINE");
    const auto v = line.substr(prefix.size());
    if (!is_digit(v[0]) || v[1] != '.' || !is_digit(v[2]) || v[3] != ' ')
        invalid("malformed protocol version");
    const auto token = v.substr(4);
    const auto type = message_type_from_token(token);
    if (!type)
        invalid("unknown message type '" + std::string(token) + "'");
    return {Version{v[0] - '0', v[2] - '0'}, *type};
}

/// Rank of a header in the canonical order of the given message type.
int canonical_rank(MessageType type, std::string_view name)
{
    if (name == header::msg_from)
        return 0;
    if (name == header::msg_to)
        return 1;
    if (name == header::content_length)
        return 100;

    auto rank_in = [&](std::initializer_list<std::string_view> order) {
        int rank = 2;
        for (auto candidate : order) {
            if (candidate == name)
                return rank;
            ++rank;
        }
        return 50;
    };

    switch (type) {
    case MessageType::ok:
    case MessageType::merge_algorithm:
    case MessageType::xml_query_result:
        return rank_in({header::transaction_id});
    case MessageType::error:
        return rank_in({header::error_code});
    case MessageType::xml_query:
        return rank_in({header::transaction_id, header::merge_algorithm, header::depth});
    case MessageType::xml_query_merged_result:
        return rank_in({header::transaction_id, header::result_sources});
    case MessageType::register_node:
        return rank_in({header::node_name});
    case MessageType::info_request:
        return rank_in({header::request});
    case MessageType::unregister_node:
    case MessageType::add_to_dl:
    case MessageType::rm_from_dl:
    case MessageType::info_reply:
        break;
    }
    return 50;
}

} // namespace

std::string_view to_string(MessageType type)
{
    for (const auto& entry : type_tokens) {
        if (entry.type == type)
            return entry.token;
    }
    return "?";
}

std::optional<MessageType> message_type_from_token(std::string_view token)
{
    for (const auto& entry : type_tokens) {
        if (entry.token == token)
            return entry.type;
    }
    return std::nullopt;
}

Message::Message(MessageType t, const NodeIdentifier& from, const NodeIdentifier& to) : type(t)
{
    headers.push_back({std::string(header::msg_from), from.str()});
    headers.push_back({std::string(header::msg_to), to.str()});
}

const std::string* Message::find(std::string_view name) const
{
    for (const auto& h : headers) {
        if (h.name == name)
            return &h.value;
    }
    return nullptr;
}

Message& Message::set(std::string_view name, std::string value)
{
    for (auto& h : headers) {
        if (h.name == name) {
            h.value = std::move(value);
            return *this;
        }
    }
    headers.push_back({std::string(name), std::move(value)});
    return *this;
}

Message& Message::erase(std::string_view name)
{
    std::erase_if(headers, [&](const HeaderVariable& h) { return h.name == name; });
    return *this;
}

Message& Message::set_body(std::string bytes)
{
    set(header::content_length, std::to_string(bytes.size()));
    if (bytes.empty())
        body.reset();
    else
        body = std::move(bytes);
    return *this;
}

NodeIdentifier Message::from() const
{
    const auto* v = find(header::msg_from);
    return v ? NodeIdentifier::parse(*v) : NodeIdentifier{};
}

NodeIdentifier Message::to() const
{
    const auto* v = find(header::msg_to);
    return v ? NodeIdentifier::parse(*v) : NodeIdentifier{};
}

std::size_t declared_body_length(std::string_view header_block)
{
    std::optional<std::size_t> length;
    bool seen = false;
    std::size_t pos = header_block.find(crlf);
    while (pos != std::string_view::npos) {
        const auto start = pos + crlf.size();
        auto end = header_block.find(crlf, start);
        const auto line = header_block.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        constexpr std::string_view key = "Content-Length:";
        if (line.substr(0, key.size()) == key) {
            if (seen)
                invalid("duplicate Content-Length");
            seen = true;
            auto value = line.substr(key.size());
            const auto first = value.find_first_not_of(' ');
            value = first == std::string_view::npos ? std::string_view{} : value.substr(first);
            length = positive_integer(value);
        }
        pos = end;
    }
    return length.value_or(0);
}

Message parse_message(std::string_view input)
{
    const auto end = input.find(header_end);
    if (end == std::string_view::npos)
        invalid("header block not terminated by an empty line");

    const auto block = input.substr(0, end);
    if (!is_valid_utf8(block))
        invalid("header is not valid UTF-8");

    Message m;
    auto line_end = block.find(crlf);
    const auto id_line = block.substr(0, line_end);
    std::tie(m.version, m.type) = parse_id_line(id_line);

    while (line_end != std::string_view::npos) {
        const auto start = line_end + crlf.size();
        line_end = block.find(crlf, start);
        const auto line = block.substr(start, line_end == std::string_view::npos ? std::string_view::npos : line_end - start);
        m.headers.push_back(split_header_line(line));
    }

    for (auto name : {header::msg_from, header::msg_to}) {
        const auto count = std::count_if(m.headers.begin(), m.headers.end(), [&](const HeaderVariable& h) { return h.name == name; });
        if (count > 1)
            invalid("duplicate " + std::string(name));
    }
    for (auto name : {header::msg_from, header::msg_to}) {
        const auto* value = m.find(name);
        if (!value)
            throw ProtocolError(error_code::missing_header, std::string(name));
        if (!NodeIdentifier::is_valid(*value))
            invalid("invalid identifier in " + std::string(name));
    }

    const auto declared = declared_body_length(block);
    const auto rest = input.substr(end + header_end.size());
    if (rest.size() != declared)
        invalid("body length " + std::to_string(rest.size()) + " does not match Content-Length");
    if (declared > 0) {
        if (!is_valid_utf8(rest))
            invalid("body is not valid UTF-8");
        m.body = std::string(rest);
    }
    return m;
}

void canonicalize_headers(Message& m)
{
    std::stable_sort(m.headers.begin(), m.headers.end(), [&](const HeaderVariable& a, const HeaderVariable& b) {
        return canonical_rank(m.type, a.name) < canonical_rank(m.type, b.name);
    });
}

std::string serialize_message(const Message& message, SerializeOptions options)
{
    const Message* m = &message;
    Message reordered;
    if (options.canonical_order) {
        reordered = message;
        canonicalize_headers(reordered);
        m = &reordered;
    }

    auto reject = [](const std::string& what) { throw std::invalid_argument("cannot serialize message: " + what); };

    if (m->version.major < 0 || m->version.major > 9 || m->version.minor < 0 || m->version.minor > 9)
        reject("version out of range");

    std::string out;
    out += "DXQP-";
    out += static_cast<char>('0' + m->version.major);
    out += '.';
    out += static_cast<char>('0' + m->version.minor);
    out += ' ';
    out += to_string(m->type);
    out += crlf;

    int from_count = 0;
    int to_count = 0;
    for (const auto& h : m->headers) {
        if (!is_vname(h.name))
            reject("invalid header name '" + h.name + "'");
        if (h.value.find(crlf) != std::string::npos || (!h.value.empty() && h.value.front() == ' '))
            reject("invalid value for '" + h.name + "'");
        if (h.name == header::msg_from || h.name == header::msg_to) {
            (h.name == header::msg_from ? from_count : to_count) += 1;
            if (!NodeIdentifier::is_valid(h.value))
                reject("invalid identifier '" + h.value + "'");
        }
        out += h.name;
        out += ": ";
        out += h.value;
        out += crlf;
    }
    if (from_count != 1 || to_count != 1)
        reject("exactly one Msg-From and one Msg-To required");
    if (!is_valid_utf8(out))
        reject("header is not valid UTF-8");

    std::size_t declared = 0;
    try {
        declared = declared_body_length(std::string_view(out).substr(0, out.size() - crlf.size()));
    } catch (const ProtocolError& e) {
        reject(e.what());
    }
    const std::size_t actual = m->body ? m->body->size() : 0;
    if (declared != actual || (m->body && m->body->empty()))
        reject("Content-Length does not match body");
    if (m->body && !is_valid_utf8(*m->body))
        reject("body is not valid UTF-8");

    out += crlf;
    if (m->body)
        out += *m->body;
    return out;
}

Message make_error(const NodeIdentifier& from, const NodeIdentifier& to, ErrorCode code,
                   std::optional<std::string> detail)
{
    Message m(MessageType::error, from, to);
    m.set(header::error_code, code.to_string());
    if (detail && !is_valid_utf8(*detail)) {
        for (auto& c : *detail) {
            if (static_cast<unsigned char>(c) >= 0x80)
                c = '?';
        }
    }
    if (detail && !detail->empty())
        m.set_body(std::move(*detail));
    return m;
}

ErrorCode error_code_of(const Message& m)
{
    const auto* value = m.find(header::error_code);
    if (!value)
        throw ProtocolError(error_code::missing_header, std::string(header::error_code));
    return parse_error_code(*value);
}

} // namespace dxq::protocol
