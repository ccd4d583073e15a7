#include "factuality/log.hpp"

#include <iostream>

namespace factuality::log {
namespace {
std::ostream* g_sink = &std::cerr;
}

void set_sink(std::ostream* sink) { g_sink = sink; }

void warn(std::string_view message) {
  if (g_sink != nullptr) *g_sink << "[warning] " << message << '\n';
}

void info(std::string_view message) {
  if (g_sink != nullptr) *g_sink << message << '\n';
}

}  // namespace factuality::log
