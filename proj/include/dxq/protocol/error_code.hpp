#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dxq::protocol {

/// Three-digit DXQP error code. Any value in 100..999 is syntactically valid;
/// only the codes listed in `error_code` carry a protocol-defined meaning.
struct ErrorCode {
    int value = 0;

    constexpr auto operator<=>(const ErrorCode&) const = default;

    std::string to_string() const;
    constexpr bool implementation_defined() const { return value >= 900 && value <= 999; }
};

namespace error_code {
inline constexpr ErrorCode invalid_message{100};
inline constexpr ErrorCode unexpected_message{101};
inline constexpr ErrorCode missing_header{102};
inline constexpr ErrorCode missing_content{103};
inline constexpr ErrorCode query_processor{200};
inline constexpr ErrorCode unsupported_merge_algorithm{300};
inline constexpr ErrorCode no_providers{400};
inline constexpr ErrorCode internal{500};
// Implementation-defined: the provider declined to run the query.
inline constexpr ErrorCode query_refused{901};
} // namespace error_code

/// Human-readable meaning of the well-known codes, empty for others.
std::string_view describe(ErrorCode code);

/// Parses exactly three ASCII digits; throws ProtocolError(100) otherwise.
ErrorCode parse_error_code(std::string_view text);

/// Raised for any wire-level violation. Carries the code the receiving node
/// answers with, and the detail that goes into the ERROR body.
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(ErrorCode code, const std::string& detail)
        : std::runtime_error(detail), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace dxq::protocol
