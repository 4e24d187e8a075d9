#pragma once

#include <filesystem>
#include <string>

#include "flexnet/model.hpp"
#include "json.hpp"

namespace flexnet {

// JSON network format:
//
//   {
//     "dispatchers": [{"id": "d1", "rate": 1.5}, ...],
//     "servers":     [{"id": "u1", "rate": 1.0}, ...],
//     "edges":       [["d1", "u1"], ...],
//     "partition":   [["u1", "u2"], ...]        (optional)
//   }
//
// Unknown keys are rejected at every level.

NetworkModel model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const NetworkModel& model);

/// Parses and validates; parse errors and invariant violations surface as
/// ModelError.
NetworkModel parse_model(const std::string& text);
NetworkModel load_model(const std::filesystem::path& path);
void save_model(const NetworkModel& model, const std::filesystem::path& path);

}  // namespace flexnet
