#include "dxq/transport/transport.hpp"

namespace dxq::transport {

using protocol::Message;
using protocol::NodeIdentifier;
using protocol::ProtocolError;
namespace error_code = protocol::error_code;

std::string_view to_string(FailureKind kind)
{
    switch (kind) {
    case FailureKind::connect: return "connect";
    case FailureKind::timeout: return "timeout";
    case FailureKind::closed: return "closed";
    }
    return "?";
}

namespace {

std::optional<NodeIdentifier> sniff_sender(std::string_view frame)
{
    constexpr std::string_view key = "\r\nMsg-From: ";
    const auto pos = frame.find(key);
    if (pos == std::string_view::npos)
        return std::nullopt;
    const auto start = pos + key.size();
    const auto end = frame.find("\r\n", start);
    if (end == std::string_view::npos)
        return std::nullopt;
    auto value = frame.substr(start, end - start);
    const auto first = value.find_first_not_of(' ');
    value = first == std::string_view::npos ? std::string_view{} : value.substr(first);
    return NodeIdentifier::try_parse(value);
}

} // namespace

Message reply_to_unparseable(std::string_view frame, const NodeIdentifier& self, const ProtocolError& error)
{
    return protocol::make_error(self, sniff_sender(frame).value_or(NodeIdentifier{}), error.code(), error.what());
}

ServedFrame serve_frame(std::string_view frame, const NodeIdentifier& self, const Handler& handler)
{
    const protocol::SerializeOptions canonical{.canonical_order = true};

    Message request;
    try {
        request = protocol::parse_message(frame);
    } catch (const ProtocolError& e) {
        return {protocol::serialize_message(reply_to_unparseable(frame, self, e), canonical), true};
    }

    Message response;
    if (request.version != protocol::current_version) {
        response = protocol::make_error(self, request.from(), error_code::unexpected_message,
                                        "unsupported protocol version");
    } else {
        try {
            response = handler(request);
        } catch (const ProtocolError& e) {
            response = protocol::make_error(self, request.from(), e.code(), e.what());
        } catch (const std::exception& e) {
            response = protocol::make_error(self, request.from(), error_code::internal, e.what());
        }
    }

    try {
        return {protocol::serialize_message(response, canonical), false};
    } catch (const std::exception& e) {
        auto fallback = protocol::make_error(self, request.from(), error_code::internal, e.what());
        return {protocol::serialize_message(fallback, canonical), false};
    }
}

} // namespace dxq::transport
