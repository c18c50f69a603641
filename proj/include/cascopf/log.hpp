#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace cascopf::log {

enum Level { kQuiet = 0, kInfo = 1, kDebug = 2 };

// Verbosity comes from the CASCOPF_LOG environment variable: quiet|info|debug.
inline Level level() {
  static Level lvl = [] {
    const char* env = std::getenv("CASCOPF_LOG");
    if (env == nullptr) return kInfo;
    if (std::strcmp(env, "quiet") == 0) return kQuiet;
    if (std::strcmp(env, "debug") == 0) return kDebug;
    return kInfo;
  }();
  return lvl;
}

template <typename... Args>
void info(const char* fmt, Args... args) {
  if (level() >= kInfo) {
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <typename... Args>
void debug(const char* fmt, Args... args) {
  if (level() >= kDebug) {
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

}  // namespace cascopf::log
