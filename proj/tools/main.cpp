#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("cog");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("COG_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
  return cog::cli::run(argc, argv);
}
