#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mea {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Threshold comes from the MEA_LOG environment variable
/// (error|warn|info|debug), default warn.
inline LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MEA_LOG");
    if (env == nullptr) return LogLevel::kWarn;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

template <typename... Args>
void log(LogLevel level, const char* fmt, Args... args) {
  if (level > log_threshold()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[%s] ", names[static_cast<int>(level)]);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

inline void log(LogLevel level, const char* msg) { log(level, "%s", msg); }

}  // namespace mea
