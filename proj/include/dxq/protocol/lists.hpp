#pragma once

#include "dxq/protocol/identity.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dxq::protocol {

/// `{A} {B} {C}` as used by Result-Sources.
std::string format_result_sources(const std::vector<NodeName>& names);
std::vector<NodeName> parse_result_sources(std::string_view text);

/// Single-space separated token lists (merge algorithms, transaction ids,
/// INFO-NAMEs). The empty string is the empty list.
std::vector<std::string> parse_space_list(std::string_view text);
std::string join_space_list(const std::vector<std::string>& items);

struct XdpSpec {
    std::optional<NodeIdentifier> identifier;
    NodeName name;

    bool operator==(const XdpSpec&) const = default;
};

/// `http://x/{PhysNet} {Other}` as used by Registered-XDPs / Active-XDPs.
std::vector<XdpSpec> parse_xdp_spec_list(std::string_view text);
std::string format_xdp_spec_list(const std::vector<XdpSpec>& specs);

} // namespace dxq::protocol
