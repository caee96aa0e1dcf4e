#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codyad {

/// Prints `warning: <msg>` to stderr and keeps a copy for run metadata.
void warn(std::string_view msg);

/// Returns and clears the warnings recorded so far.
std::vector<std::string> drain_warnings();

/// Silences stderr echo (warnings are still recorded).
void set_warning_echo(bool on);

}  // namespace codyad
