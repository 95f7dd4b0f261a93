#pragma once

#include <functional>
#include <string_view>

namespace tabdistill {

// Warnings go to stderr unless a sink is installed. The sink is global and
// guarded by a mutex, so worker threads may warn concurrently.
using WarningSink = std::function<void(std::string_view)>;

void log_warning(std::string_view message);
// Installs `sink` and returns the previous one (empty = stderr).
WarningSink set_warning_sink(WarningSink sink);

}  // namespace tabdistill
