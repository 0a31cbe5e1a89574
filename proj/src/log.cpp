#include "marom/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace marom::log {
namespace {

Level from_env() {
    const char* env = std::getenv("MAROM_LOG");
    if (env == nullptr) return Level::error;
    std::string_view v(env);
    if (v == "debug") return Level::debug;
    if (v == "info") return Level::info;
    return Level::error;
}

std::atomic<int>& current() {
    static std::atomic<int> lvl{static_cast<int>(from_env())};
    return lvl;
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

void emit(Level lvl, std::string_view tag, const std::string& msg) {
    if (static_cast<int>(lvl) > current().load()) return;
    std::lock_guard<std::mutex> lock(sink_mutex());
    std::cerr << "[marom " << tag << "] " << msg << '\n';
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void error(const std::string& msg) { emit(Level::error, "error", msg); }
// Warnings are informational: they never change results.
void warn(const std::string& msg) { emit(Level::info, "warn", msg); }
void info(const std::string& msg) { emit(Level::info, "info", msg); }
void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }

}  // namespace marom::log
