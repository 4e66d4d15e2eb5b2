#include "dxq/protocol/identity.hpp"

#include "dxq/protocol/error_code.hpp"

#include <algorithm>
#include <cctype>

namespace dxq::protocol {

namespace {

bool is_scheme_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

// Characters RFC 3986 never allows unencoded, plus anything non-printable.
bool is_url_char(char c)
{
    const auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || u >= 0x7F)
        return false;
    switch (c) {
    case '{':
    case '}':
    case '<':
    case '>':
    case '"':
    case '\\':
    case '^':
    case '`':
    case '|':
        return false;
    default:
        return true;
    }
}

} // namespace

std::string ErrorCode::to_string() const
{
    std::string s = std::to_string(value);
    while (s.size() < 3)
        s.insert(s.begin(), '0');
    return s;
}

std::string_view describe(ErrorCode code)
{
    switch (code.value) {
    case 100: return "Invalid message";
    case 101: return "Unexpected message";
    case 102: return "Missing header variable";
    case 103: return "Missing content";
    case 200: return "XML-Query processor error";
    case 300: return "Unsupported merge algorithm";
    case 400: return "No XML document providers available";
    case 500: return "Internal error";
    default: break;
    }
    if (code.implementation_defined())
        return "Implementation-defined error";
    return {};
}

ErrorCode parse_error_code(std::string_view text)
{
    if (text.size() != 3 || !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw ProtocolError(error_code::invalid_message, "Error-Code must be three digits");
    return ErrorCode{(text[0] - '0') * 100 + (text[1] - '0') * 10 + (text[2] - '0')};
}

bool NodeIdentifier::is_valid(std::string_view text)
{
    if (text.empty())
        return true;
    const auto sep = text.find("://");
    if (sep == std::string_view::npos || sep == 0)
        return false;
    const auto scheme = text.substr(0, sep);
    if (!std::isalpha(static_cast<unsigned char>(scheme.front())))
        return false;
    if (!std::all_of(scheme.begin(), scheme.end(), is_scheme_char))
        return false;
    const auto rest = text.substr(sep + 3);
    return !rest.empty() && std::all_of(rest.begin(), rest.end(), is_url_char);
}

std::optional<NodeIdentifier> NodeIdentifier::try_parse(std::string_view text)
{
    if (!is_valid(text))
        return std::nullopt;
    return NodeIdentifier(std::string(text));
}

NodeIdentifier NodeIdentifier::parse(std::string_view text)
{
    if (!is_valid(text))
        throw ProtocolError(error_code::invalid_message, "invalid identifier '" + std::string(text) + "'");
    return NodeIdentifier(std::string(text));
}

bool NodeName::is_valid(std::string_view text)
{
    return text.find_first_of("\r\n{}") == std::string_view::npos;
}

NodeName NodeName::parse(std::string_view text)
{
    if (!is_valid(text))
        throw ProtocolError(error_code::invalid_message, "invalid node name '" + std::string(text) + "'");
    return NodeName(std::string(text));
}

bool TransactionId::is_valid(std::string_view text)
{
    return !text.empty() && text.find_first_of(" \r\n") == std::string_view::npos;
}

TransactionId TransactionId::parse(std::string_view text)
{
    if (!is_valid(text))
        throw ProtocolError(error_code::invalid_message, "invalid Transaction-ID '" + std::string(text) + "'");
    return TransactionId(std::string(text));
}

bool is_valid_merge_algorithm_name(std::string_view text)
{
    return !text.empty() && std::all_of(text.begin(), text.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
}

} // namespace dxq::protocol
