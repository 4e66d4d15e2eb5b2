#pragma once

#include <chrono>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace dxq::cli {

enum ExitCode { success = 0, protocol_error = 1, config_error = 2, transport_failure = 3 };

struct Environment {
    std::ostream& out;
    std::ostream& err;
    /// Blocks until the serve commands should shut down.
    std::function<void()> wait_for_shutdown;
    /// Called once a serve command is up, before waiting.
    std::function<void()> on_ready = {};
};

/// `1s`, `500ms`, `2m`; a bare number means seconds.
std::optional<std::chrono::milliseconds> parse_duration(std::string_view text);

int run(int argc, const char* const* argv, Environment& env);

} // namespace dxq::cli
