#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "giph/domain.hpp"

namespace giph {

inline constexpr const char* kFormatTag = "giph-v1";

nlohmann::json to_json(const TaskGraph& graph);
nlohmann::json to_json(const DeviceNetwork& network);
nlohmann::json to_json(const ProblemInstance& instance);
nlohmann::json to_json(const Placement& placement);

// Readers accept either a bare object or one carrying the format key; a
// mismatching format key is rejected.
TaskGraph graph_from_json(const nlohmann::json& j);
DeviceNetwork network_from_json(const nlohmann::json& j);
ProblemInstance instance_from_json(const nlohmann::json& j);
Placement placement_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

} // namespace giph
