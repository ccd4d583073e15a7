#pragma once

#include <ostream>
#include <string_view>

namespace factuality::log {

// Warnings and progress go to a single process-wide sink (stderr by default).
void set_sink(std::ostream* sink);
void warn(std::string_view message);
void info(std::string_view message);

}  // namespace factuality::log
