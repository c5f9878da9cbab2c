#include "newsloc/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace newsloc {

void init_logging() {
  static bool initialized = false;
  if (!initialized) {
    auto logger = spdlog::stderr_color_mt("newsloc");
    logger->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    spdlog::set_default_logger(logger);
    initialized = true;
  }
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("NL_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

}  // namespace newsloc
