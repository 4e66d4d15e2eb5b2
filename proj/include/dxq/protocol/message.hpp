#pragma once

#include "dxq/protocol/error_code.hpp"
#include "dxq/protocol/identity.hpp"

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dxq::protocol {

enum class MessageType {
    ok,
    error,
    xml_query,
    merge_algorithm,
    xml_query_result,
    xml_query_merged_result,
    register_node,
    unregister_node,
    add_to_dl,
    rm_from_dl,
    info_request,
    info_reply,
};

inline constexpr MessageType all_message_types[] = {
    MessageType::ok,
    MessageType::error,
    MessageType::xml_query,
    MessageType::merge_algorithm,
    MessageType::xml_query_result,
    MessageType::xml_query_merged_result,
    MessageType::register_node,
    MessageType::unregister_node,
    MessageType::add_to_dl,
    MessageType::rm_from_dl,
    MessageType::info_request,
    MessageType::info_reply,
};

/// Wire token, e.g. "XML-QUERY-RESULT".
std::string_view to_string(MessageType type);
std::optional<MessageType> message_type_from_token(std::string_view token);

namespace header {
inline constexpr std::string_view msg_from = "Msg-From";
inline constexpr std::string_view msg_to = "Msg-To";
inline constexpr std::string_view content_length = "Content-Length";
inline constexpr std::string_view transaction_id = "Transaction-ID";
inline constexpr std::string_view merge_algorithm = "Merge-Algorithm";
inline constexpr std::string_view error_code = "Error-Code";
inline constexpr std::string_view result_sources = "Result-Sources";
inline constexpr std::string_view node_name = "Node-Name";
inline constexpr std::string_view request = "Request";
inline constexpr std::string_view depth = "Depth";
} // namespace header

struct Version {
    int major = 1;
    int minor = 0;

    auto operator<=>(const Version&) const = default;
};

inline constexpr Version current_version{1, 0};

struct HeaderVariable {
    std::string name;
    std::string value;

    bool operator==(const HeaderVariable&) const = default;
};

/// One DXQP message. `headers` keeps wire order; Content-Length lives there
/// like any other variable, and `body` is present exactly when it declares a
/// positive length.
struct Message {
    Version version = current_version;
    MessageType type = MessageType::ok;
    std::vector<HeaderVariable> headers;
    std::optional<std::string> body;

    Message() = default;
    Message(MessageType t, const NodeIdentifier& from, const NodeIdentifier& to);

    const std::string* find(std::string_view name) const;
    std::optional<std::string> get(std::string_view name) const { return find(name) ? std::optional(*find(name)) : std::nullopt; }
    bool has(std::string_view name) const { return find(name) != nullptr; }

    /// Replaces the first variable called `name`, or appends one.
    Message& set(std::string_view name, std::string value);
    Message& erase(std::string_view name);

    /// Sets the body and its Content-Length. An empty body yields
    /// `Content-Length: 0` with no body bytes.
    Message& set_body(std::string bytes);

    NodeIdentifier from() const;
    NodeIdentifier to() const;

    bool operator==(const Message&) const = default;
};

/// Parses one complete framed message. Throws ProtocolError with code 100
/// (malformed) or 102 (Msg-From/Msg-To absent).
Message parse_message(std::string_view input);

struct SerializeOptions {
    /// Reorder headers into the canonical order for the message type.
    bool canonical_order = false;
};

/// Throws std::invalid_argument when `m` violates the message invariants.
std::string serialize_message(const Message& m, SerializeOptions options = {});

/// Stable-sorts headers: Msg-From, Msg-To, the type-specific variables in
/// grammar order, any others, Content-Length last.
void canonicalize_headers(Message& m);

/// Body length declared by a header block (ID line plus variables, without
/// the terminating blank line). Zero when Content-Length is absent, empty or
/// not a positive integer. Throws ProtocolError(100) on duplicate
/// Content-Length variables.
std::size_t declared_body_length(std::string_view header_block);

Message make_error(const NodeIdentifier& from, const NodeIdentifier& to, ErrorCode code,
                   std::optional<std::string> detail = std::nullopt);

/// Error code and detail of an ERROR message; Error-Code must be present.
ErrorCode error_code_of(const Message& m);

} // namespace dxq::protocol
