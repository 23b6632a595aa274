#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "zoomtrace/trajectory.hpp"

namespace zt::prompts {

// Names of the compiled-in prompt assets (assets/prompts/<name>.txt).
std::vector<std::string> asset_names();
// Throws std::out_of_range for unknown names.
std::string_view asset(std::string_view name);

// Default task prompt for a task kind; counting uses the object-targeted SOP.
std::string_view default_task_asset(traj::TaskKind kind);

// Longest zoom chain the named SOP permits.
int layer_cap(std::string_view asset_name);

}  // namespace zt::prompts
