#pragma once

#include "dxq/protocol/message.hpp"

#include <string>
#include <vector>

namespace dxq::node {

struct InfoRequest {
    /// `Request: *`
    bool all = false;
    /// Requested INFO-NAMEs in request order, duplicates removed.
    std::vector<std::string> names;
};

/// Throws ProtocolError 102 without a Request variable and 100 when a name
/// is not a VNAME.
InfoRequest parse_info_request(const protocol::Message& m);

/// Names that cannot be answered as INFO variables because they would clash
/// with the message's own header variables.
bool is_reserved_info_name(std::string_view name);

/// Builds an INFO-REPLY: one variable per requested name, valued by
/// `lookup`, skipping reserved names.
template <class Lookup>
protocol::Message make_info_reply(const protocol::NodeIdentifier& from, const protocol::NodeIdentifier& to,
                                  const std::vector<std::string>& names, Lookup&& lookup)
{
    protocol::Message reply(protocol::MessageType::info_reply, from, to);
    for (const auto& name : names) {
        if (!is_reserved_info_name(name))
            reply.headers.push_back({name, lookup(name)});
    }
    return reply;
}

} // namespace dxq::node
