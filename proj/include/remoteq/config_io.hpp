#pragma once

#include "remoteq/types.hpp"

#include "json.hpp"

#include <string>

namespace remoteq {

// JSON form of a scenario; see docs/scenario_schema.md. Unknown keys and type errors
// raise ConfigError listing every problem found.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

PolicyKind parse_policy_kind(const std::string& s);

} // namespace remoteq
