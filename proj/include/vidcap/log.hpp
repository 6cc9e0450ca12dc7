#pragma once

#include <string_view>

namespace vidcap {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kSilent = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();

// Thread-safe line logging to stderr. Never touches stdout, so artifact
// output stays byte-stable.
void log(LogLevel level, std::string_view message);
inline void log_info(std::string_view m) { log(LogLevel::kInfo, m); }
inline void log_warning(std::string_view m) { log(LogLevel::kWarning, m); }

}  // namespace vidcap
