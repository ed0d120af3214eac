#include "drsl/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

namespace drsl {

namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("DRSL_LOG");
  if (!env) return LogLevel::kInfo;
  std::string v(env);
  if (v == "error") return LogLevel::kError;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

LogLevel& current() {
  static LogLevel level = level_from_env();
  return level;
}

void emit(LogLevel level, const char* tag, const std::string& msg) {
  if (level > current()) return;
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
  std::fflush(stderr);
}

}  // namespace

LogLevel log_level() { return current(); }

void set_log_level(LogLevel level) { current() = level; }

void log_error(const std::string& msg) { emit(LogLevel::kError, "error", msg); }
void log_info(const std::string& msg) { emit(LogLevel::kInfo, "info", msg); }
void log_debug(const std::string& msg) { emit(LogLevel::kDebug, "debug", msg); }

}  // namespace drsl
