#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tattnet/model.hpp"
#include "tattnet/synthetic.hpp"
#include "tattnet/trainer.hpp"

namespace tattnet {

/// Contents of a run configuration file. Every section and key is optional;
/// missing keys keep their defaults, unknown keys are rejected.
///
///   {
///     "model":     { "features": 16, "max_visits": 48, ..., "disable_short": false },
///     "train":     { "learning_rate": 0.001, "epochs": 300, ... },
///     "data":      { "journeys": 2000, "positive_rate": 0.2, ... },
///     "fallback_values": [0.0, ...]
///   }
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SyntheticConfig data;
  std::vector<double> fallback_values;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& config);

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

}  // namespace tattnet
