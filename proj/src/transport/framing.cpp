#include "dxq/transport/framing.hpp"

#include "dxq/protocol/message.hpp"

#include <algorithm>

namespace dxq::transport {

namespace {

constexpr std::string_view id_prefix = "DXQP-";
constexpr std::string_view header_end = "\r\n\r\n";

using protocol::ProtocolError;
namespace error_code = protocol::error_code;

void check_prefix(std::string_view buffer)
{
    const auto n = std::min(buffer.size(), id_prefix.size());
    if (buffer.substr(0, n) != id_prefix.substr(0, n))
        throw ProtocolError(error_code::invalid_message, "not a DXQP message");
}

[[noreturn]] void header_too_large(const FrameLimits& limits)
{
    throw ProtocolError(error_code::internal,
                        "header section exceeds " + std::to_string(limits.max_header) + " bytes");
}

std::size_t checked_body_length(std::string_view header_block, const FrameLimits& limits)
{
    const auto length = protocol::declared_body_length(header_block);
    if (length > limits.max_body)
        throw ProtocolError(error_code::internal, "body exceeds " + std::to_string(limits.max_body) + " bytes");
    return length;
}

} // namespace

std::optional<std::string> read_frame(std::istream& in, FrameLimits limits)
{
    std::string frame;
    char c = 0;
    while (true) {
        if (!in.get(c)) {
            if (frame.empty())
                return std::nullopt;
            throw ProtocolError(error_code::invalid_message, "stream ended inside a message header");
        }
        frame += c;
        if (frame.size() <= id_prefix.size())
            check_prefix(frame);
        if (frame.size() >= header_end.size() && frame.compare(frame.size() - header_end.size(), header_end.size(), header_end) == 0)
            break;
        if (frame.size() > limits.max_header)
            header_too_large(limits);
    }

    const auto block = std::string_view(frame).substr(0, frame.size() - header_end.size());
    const auto length = checked_body_length(block, limits);
    if (length > 0) {
        const auto offset = frame.size();
        frame.resize(offset + length);
        in.read(frame.data() + offset, static_cast<std::streamsize>(length));
        if (static_cast<std::size_t>(in.gcount()) != length)
            throw ProtocolError(error_code::invalid_message, "stream ended inside a message body");
    }
    return frame;
}

std::optional<std::string> FrameAssembler::next()
{
    if (buffer_.empty())
        return std::nullopt;

    if (!header_end_) {
        check_prefix(buffer_);
        const auto from = scanned_ >= header_end.size() ? scanned_ - (header_end.size() - 1) : 0;
        const auto pos = buffer_.find(header_end, from);
        if (pos == std::string::npos) {
            if (buffer_.size() > limits_.max_header)
                header_too_large(limits_);
            scanned_ = buffer_.size();
            return std::nullopt;
        }
        if (pos + header_end.size() > limits_.max_header)
            header_too_large(limits_);
        header_end_ = pos + header_end.size();
        body_length_ = checked_body_length(std::string_view(buffer_).substr(0, pos), limits_);
    }

    const auto total = *header_end_ + body_length_;
    if (buffer_.size() < total)
        return std::nullopt;

    std::string frame = buffer_.substr(0, total);
    buffer_.erase(0, total);
    header_end_.reset();
    scanned_ = 0;
    body_length_ = 0;
    return frame;
}

} // namespace dxq::transport
