#pragma once

#include <json.hpp>

#include "tattnet/config.hpp"

namespace tattnet::detail {

nlohmann::ordered_json model_config_to_json(const ModelConfig& c);
/// Overwrites the fields present in `j`; throws DataError on unknown keys or bad types.
void model_config_from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace tattnet::detail
