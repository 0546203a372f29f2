#pragma once

#include <string>

#include "json.hpp"
#include "ppn/model.hpp"

namespace ppn {

nlohmann::json to_json(const GateKinetics& k);
GateKinetics gate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelSpec& m);
ModelSpec model_from_json(const nlohmann::json& j);

ModelSpec load_model_file(const std::string& path);
void save_model_file(const ModelSpec& m, const std::string& path);

}  // namespace ppn
