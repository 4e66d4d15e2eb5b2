#include "dxq/node/info.hpp"

#include "dxq/protocol/lists.hpp"

#include <algorithm>

namespace dxq::node {

namespace h = protocol::header;
using protocol::ProtocolError;

InfoRequest parse_info_request(const protocol::Message& m)
{
    const auto* request = m.find(h::request);
    if (!request)
        throw ProtocolError(protocol::error_code::missing_header, std::string(h::request));
    InfoRequest out;
    if (*request == "*") {
        out.all = true;
        return out;
    }
    for (auto& name : protocol::parse_space_list(*request)) {
        const bool vname = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
            return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '-';
        });
        if (!vname)
            throw ProtocolError(protocol::error_code::invalid_message, "invalid INFO-NAME '" + name + "'");
        if (std::find(out.names.begin(), out.names.end(), name) == out.names.end())
            out.names.push_back(std::move(name));
    }
    return out;
}

bool is_reserved_info_name(std::string_view name)
{
    return name == h::msg_from || name == h::msg_to || name == h::content_length;
}

} // namespace dxq::node
