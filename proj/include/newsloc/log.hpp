#pragma once

#include <spdlog/spdlog.h>

namespace newsloc {

// Reads NL_LOG (trace, debug, info, warn, error, off) and configures the
// default stderr logger. Safe to call more than once.
void init_logging();

}  // namespace newsloc
