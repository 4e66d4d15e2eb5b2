#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace dxq::protocol {

/// URL identifying a DXQ-Node, or empty for a client that has not yet been
/// assigned one.
class NodeIdentifier {
public:
    NodeIdentifier() = default;

    /// Throws ProtocolError(100) when `text` is neither empty nor a URL.
    static NodeIdentifier parse(std::string_view text);
    static std::optional<NodeIdentifier> try_parse(std::string_view text);
    static bool is_valid(std::string_view text);

    const std::string& str() const { return value_; }
    bool empty() const { return value_.empty(); }

    auto operator<=>(const NodeIdentifier&) const = default;

private:
    explicit NodeIdentifier(std::string value) : value_(std::move(value)) {}
    std::string value_;
};

/// User-facing node name: anything without CR, LF, '{' or '}'.
class NodeName {
public:
    NodeName() = default;

    static NodeName parse(std::string_view text);
    static bool is_valid(std::string_view text);

    const std::string& str() const { return value_; }

    auto operator<=>(const NodeName&) const = default;

private:
    explicit NodeName(std::string value) : value_(std::move(value)) {}
    std::string value_;
};

/// Sender-chosen correlation token; non-empty, no space, CR or LF.
class TransactionId {
public:
    TransactionId() = default;

    static TransactionId parse(std::string_view text);
    static bool is_valid(std::string_view text);

    const std::string& str() const { return value_; }

    auto operator<=>(const TransactionId&) const = default;

private:
    explicit TransactionId(std::string value) : value_(std::move(value)) {}
    std::string value_;
};

/// Merge algorithm names are one or more of [a-z0-9-].
bool is_valid_merge_algorithm_name(std::string_view text);

} // namespace dxq::protocol
