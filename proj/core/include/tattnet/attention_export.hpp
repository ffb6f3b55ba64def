#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tattnet/model.hpp"

namespace tattnet {

/// Attention maps of one forward pass. Maps of disabled modules are absent.
struct AttentionBundle {
  std::vector<Tensor> xi;       // per head, N x N, rows over key features
  std::optional<Tensor> alpha;  // N x T, columns over features
  std::optional<Tensor> p;      // N x T x T, (feature, source, target)
  Tensor beta;                  // d_u x T, rows over visits
};

/// Runs the model on `journey` with the observation mask applied.
AttentionBundle capture_attention(ModelParams& model, const PatientJourney& journey);

/// Writes xi_head<k>.csv, alpha.csv, p_target<j>.csv (one per visit, N x T
/// over source visits) and beta.csv. Every file starts with a header row;
/// each data row starts with its row label. Returns the written paths.
std::vector<std::filesystem::path> write_attention(const AttentionBundle& bundle,
                                                   const std::filesystem::path& out_dir,
                                                   const std::vector<std::string>& feature_names = {});

std::vector<std::filesystem::path> export_attention(ModelParams& model, const PatientJourney& journey,
                                                    const std::filesystem::path& out_dir,
                                                    const std::vector<std::string>& feature_names = {});

}  // namespace tattnet
