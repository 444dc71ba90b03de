#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace aegis {

// Verbosity comes from the AEGIS_SIM_LOG environment variable:
// off | error | warn | info | debug (default warn). Everything goes to
// stderr so stdout stays reserved for byte-stable command output.
enum class LogLevel { off = 0, error = 1, warn = 2, info = 3, debug = 4 };

inline LogLevel log_level_from_env() {
  const char* v = std::getenv("AEGIS_SIM_LOG");
  if (!v) return LogLevel::warn;
  const std::string s(v);
  if (s == "off") return LogLevel::off;
  if (s == "error") return LogLevel::error;
  if (s == "warn") return LogLevel::warn;
  if (s == "info") return LogLevel::info;
  if (s == "debug") return LogLevel::debug;
  std::cerr << "[warn] AEGIS_SIM_LOG value '" << s << "' not recognized, using warn\n";
  return LogLevel::warn;
}

inline LogLevel& log_level() {
  static LogLevel level = log_level_from_env();
  return level;
}

inline void log_line(LogLevel at, const std::string& msg) {
  if (at > log_level()) return;
  const char* tag = at == LogLevel::error ? "error"
                    : at == LogLevel::warn ? "warn"
                    : at == LogLevel::info ? "info"
                                           : "debug";
  std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void log_error(const std::string& msg) { log_line(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log_line(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log_line(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::debug, msg); }

}  // namespace aegis
