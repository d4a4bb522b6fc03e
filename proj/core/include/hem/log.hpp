#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace hem {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Threshold read once from HEM_LOG={error,info,debug}; unset or unknown
/// values fall back to error.
inline LogLevel log_threshold() {
    static const LogLevel level = [] {
        const char* env = std::getenv("HEM_LOG");
        const std::string_view v = env != nullptr ? env : "";
        if (v == "debug") {
            return LogLevel::debug;
        }
        if (v == "info") {
            return LogLevel::info;
        }
        return LogLevel::error;
    }();
    return level;
}

inline void log_line(LogLevel level, std::string_view tag, const std::string& message) {
    if (level <= log_threshold()) {
        std::cerr << "[hem:" << tag << "] " << message << '\n';
    }
}

inline void log_error(const std::string& message) { log_line(LogLevel::error, "error", message); }
inline void log_info(const std::string& message) { log_line(LogLevel::info, "info", message); }
inline void log_debug(const std::string& message) { log_line(LogLevel::debug, "debug", message); }

}  // namespace hem
