#pragma once

#include "dxq/protocol/message.hpp"

#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace dxq::log {

enum class Level { off = 0, error, warn, info, debug };

/// Parses `off|error|warn|info|debug`; nullopt for anything else.
std::optional<Level> parse_level(std::string_view text);

/// Initial level comes from the DXQ_LOG environment variable, default warn.
Level level();
void set_level(Level level);
bool enabled(Level level);

/// Receives each finished record line (without newline). Default: stderr.
using Sink = std::function<void(std::string_view line)>;
void set_sink(Sink sink);

using Field = std::pair<std::string_view, std::string>;

/// Emits `level=<l> event=<event> k=v ...`; values containing spaces,
/// quotes or '=' are double-quoted with backslash escapes.
void write(Level level, std::string_view event, std::initializer_list<Field> fields = {});

/// One record for a request/response pair seen by `node`.
void exchange(std::string_view node, const protocol::Message& request, const protocol::Message& response);

} // namespace dxq::log
