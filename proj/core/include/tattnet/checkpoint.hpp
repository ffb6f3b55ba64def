#pragma once

#include <filesystem>
#include <string>

#include "tattnet/model.hpp"

namespace tattnet {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON text: format_version, the model config, then one line per parameter
/// with its name, shape and values at 17 significant digits.
std::string format_checkpoint(ModelParams& model);
/// Rebuilds the model from the stored config and overwrites every parameter.
/// Throws DataError on version, name or shape mismatches.
ModelParams parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, ModelParams& model);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace tattnet
