#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace xborder {

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::time_point<Clock, std::chrono::milliseconds>;

Timestamp now_ms();

// ISO-8601 UTC with millisecond precision: 2024-03-01T09:15:02.117Z
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);

}  // namespace xborder
