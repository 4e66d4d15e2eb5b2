#pragma once

#include "dxq/protocol/error_code.hpp"
#include "dxq/protocol/identity.hpp"
#include "dxq/query/query.hpp"
#include "dxq/xml/node.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dxq::merge {

inline constexpr std::string_view concatenate = "concatenate";
inline constexpr std::string_view remove_duplicates = "remove-duplicates";
inline constexpr std::string_view user_defined = "user-defined";

/// Result delivered by one provider. The body is the parsed XML-QUERY-RESULT
/// body; usually a single element, but a query may return a sequence.
struct XdpResult {
    protocol::NodeName source_name;
    std::vector<xml::Node> body;
};

/// Merge failure with the error code reported to the client.
class MergeError : public std::runtime_error {
public:
    MergeError(protocol::ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    protocol::ErrorCode code() const { return code_; }

private:
    protocol::ErrorCode code_;
};

/// The algorithms this distributor implements, in INFO-REPLY order.
std::vector<std::string> list_algorithms();
bool is_supported(std::string_view algorithm);

/// `<result>` framing every result's nodes in input order.
xml::Node merge_concatenate(std::span<const XdpResult> results);

/// Levels above `depth` (root = 0) are unified structurally on element name
/// and attributes; subtrees at `depth` and below are pooled under their
/// unified parent with exact duplicates removed, first occurrence kept.
xml::Node merge_remove_duplicates(std::span<const XdpResult> results, int depth);

/// `<context-item><result><xdp><name>..</name></xdp><xqres>..</xqres></result>...`
xml::Node build_context_item(std::span<const XdpResult> results);

/// Runs the client's merge query over the context item; returns the
/// serialized result. Query failures become MergeError(200).
std::string merge_user_defined(std::span<const XdpResult> results, std::string_view merge_query,
                               const query::QueryProcessor& processor);

struct MergeRequest {
    std::string algorithm;
    std::optional<int> depth;
    std::optional<std::string> merge_query;
};

/// Dispatches on the algorithm name and returns the serialized merged body.
std::string run(const MergeRequest& request, std::span<const XdpResult> results,
                const query::QueryProcessor& processor);

} // namespace dxq::merge
