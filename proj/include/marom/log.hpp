#pragma once

#include <string>

namespace marom::log {

enum class Level { error = 0, info = 1, debug = 2 };

/// Current verbosity. Initialised from the MAROM_LOG environment variable
/// ("error", "info" or "debug"); defaults to error.
Level level();
void set_level(Level lvl);

void error(const std::string& msg);
void warn(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace marom::log
