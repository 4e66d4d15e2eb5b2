#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>

namespace dxq::transport {

struct FrameLimits {
    std::size_t max_header = 64 * 1024;
    std::size_t max_body = 64 * 1024 * 1024;
};

/// Reads exactly one frame from `in`: header lines up to the blank line,
/// then the declared body. Never consumes bytes of the following frame.
/// Returns nullopt on a clean end of stream; throws ProtocolError(100) when
/// the stream ends mid-frame and ProtocolError(500) when a limit is hit.
std::optional<std::string> read_frame(std::istream& in, FrameLimits limits = {});

/// Incremental framer for socket reads: feed arbitrary chunks, pop complete
/// frames. Rejects input that does not start like a DXQP frame with
/// ProtocolError(100) as soon as the first bytes arrive.
class FrameAssembler {
public:
    explicit FrameAssembler(FrameLimits limits = {}) : limits_(limits) {}

    void feed(std::string_view bytes) { buffer_.append(bytes); }
    std::optional<std::string> next();

    /// True when no partial frame is buffered.
    bool idle() const { return buffer_.empty(); }

private:
    FrameLimits limits_;
    std::string buffer_;
    std::size_t scanned_ = 0;
    std::optional<std::size_t> header_end_;
    std::size_t body_length_ = 0;
};

} // namespace dxq::transport
