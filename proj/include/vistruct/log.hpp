#pragma once

#include <iostream>
#include <string>

namespace vistruct::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

inline Level& threshold() {
    static Level level = Level::info;
    return level;
}

inline void set_level(Level level) { threshold() = level; }

inline void emit(Level level, const std::string& msg) {
    if (level < threshold()) return;
    const char* tag = level == Level::debug  ? "debug"
                      : level == Level::info ? "info"
                      : level == Level::warn ? "warn"
                                             : "error";
    std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void debug(const std::string& msg) { emit(Level::debug, msg); }
inline void info(const std::string& msg) { emit(Level::info, msg); }
inline void warn(const std::string& msg) { emit(Level::warn, msg); }
inline void error(const std::string& msg) { emit(Level::error, msg); }

}  // namespace vistruct::log
