#pragma once

// Internal JSON helpers shared between the serialization units.

#include <json.hpp>

#include "unitax/labels.hpp"

namespace unitax {

nlohmann::json spaces_to_json_array(const std::vector<LabelSpace>& spaces);
std::vector<LabelSpace> spaces_from_json_array(const nlohmann::json& arr);

} // namespace unitax
