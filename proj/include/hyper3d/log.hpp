#pragma once

#include <string>

namespace hyper3d {

// Logging entry points usable from translation units that cannot include
// spdlog directly (libtorch ships its own, incompatible fmt headers).
void log_info(const std::string& message);
void log_warn(const std::string& message);
void set_log_quiet(bool quiet);

/// printf-style formatting into a std::string.
std::string strformat(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

}  // namespace hyper3d
