#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tattnet/config.hpp"
#include "tattnet/journey.hpp"
#include "tattnet/metrics.hpp"
#include "tattnet/model.hpp"
#include "tattnet/trainer.hpp"

namespace tattnet {

/// Split of a journey set with standardization fitted on the training part.
struct PreparedData {
  DatasetSplit split;
  FeatureStats stats;
  ClassWeights weights;
  std::vector<PatientJourney> train, valid, test;
};

PreparedData prepare_data(const std::vector<PatientJourney>& journeys, std::uint64_t split_seed);

struct TrainingRun {
  ModelParams model;
  TrainHistory history;
  MetricsReport test_report;
};

/// Trains a fresh model built from `model_config` and scores the test split.
TrainingRun run_training(const ModelConfig& model_config, const TrainConfig& train_config, const PreparedData& data,
                         const EpochCallback& on_epoch = {});

/// Applies one of "full", "alpha", "beta", "gamma", "delta" to `base`.
ModelConfig with_variant(ModelConfig base, const std::string& variant);

struct AblationRecord {
  std::string variant;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  MetricsReport report;
  std::size_t best_epoch = 0;
};

/// For repeat r every variant shares seed base_seed + r (split, init and
/// batch order), so variants are compared on identical splits.
std::vector<AblationRecord> run_ablation(const RunConfig& config, const std::vector<PatientJourney>& journeys,
                                         const std::vector<std::string>& variants, std::size_t repeats,
                                         std::uint64_t base_seed,
                                         const std::function<void(const AblationRecord&)>& on_record = {});

/// Mean and spread of test AUROC / AUPRC per variant, in order of first appearance.
struct VariantSummary {
  std::string variant;
  RepeatSummary auroc, auprc;
  std::size_t runs = 0;
};
std::vector<VariantSummary> summarize_ablation(const std::vector<AblationRecord>& records);

}  // namespace tattnet
