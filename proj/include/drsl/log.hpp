#pragma once

#include <string>

namespace drsl {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// resolved once from DRSL_LOG (error|info|debug); info when unset or unknown
LogLevel log_level();
void set_log_level(LogLevel level);

// one line to stderr, prefixed with the level, dropped when below threshold
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace drsl
