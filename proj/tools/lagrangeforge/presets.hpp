#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lagrangeforge::cli {

// Names of the bundled demonstration problems, in listing order.
std::vector<std::string> preset_names();
// JSON text of a bundled problem, or nullopt for an unknown name.
std::optional<std::string> preset_text(const std::string& name);

}  // namespace lagrangeforge::cli
