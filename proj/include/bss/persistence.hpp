#pragma once

#include <json.hpp>

#include "bss/registry.hpp"
#include "bss/sequential.hpp"

namespace bss {

// Self-describing JSON model documents. Doubles are written in shortest
// round-trip form, so load(save(m)) reproduces every parameter bit for bit.
// Loaders throw SchemaMismatch on any structural problem.

nlohmann::ordered_json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols);

nlohmann::ordered_json to_json(const StationMap& stations);
StationMap station_map_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const RegressorModel& model);
RegressorModel regressor_from_json(const nlohmann::json& j);

/// The sparse recurrent matrix is stored as (row, col, value) triples.
nlohmann::ordered_json to_json(const EsnModel& model);
EsnModel esn_from_json(const nlohmann::json& j);

/// All per-user models plus the global fallback of a registry.
nlohmann::ordered_json to_json(const UserModelRegistry& registry);
UserModelRegistry registry_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const WindowClassifier& model);
WindowClassifier window_classifier_from_json(const nlohmann::json& j);

}  // namespace bss
