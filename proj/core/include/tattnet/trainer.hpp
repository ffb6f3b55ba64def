#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tattnet/journey.hpp"
#include "tattnet/metrics.hpp"
#include "tattnet/model.hpp"

namespace tattnet {

struct TrainConfig {
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  /// Epochs without a better validation AUPRC before stopping.
  std::size_t patience = 20;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_auroc = 0.0;
  double valid_auprc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  bool stopped_early = false;
};

/// Adam over the parameters of one model, state keyed by visit order.
class AdamOptimizer {
 public:
  AdamOptimizer(ModelParams& model, const TrainConfig& config);
  /// Applies one update from the gradients currently stored in the model.
  void step();
  std::size_t steps() const { return step_; }

 private:
  ModelParams& model_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::vector<Tensor> first_, second_;
};

/// Class-weighted mean cross-entropy over `journeys` (no gradient).
double mean_loss(ModelParams& model, const std::vector<PatientJourney>& journeys, const ClassWeights& weights);

/// Accumulates the gradient of the mean batch loss into the model and
/// returns that loss.
double accumulate_batch_gradient(ModelParams& model, const std::vector<const PatientJourney*>& batch,
                                 const ClassWeights& weights);

ScoredSet score_journeys(ModelParams& model, const std::vector<PatientJourney>& journeys);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch training on the class-weighted loss. After each epoch the
/// validation split is scored; the parameters of the epoch with the best
/// validation AUPRC are restored before returning. When the validation split
/// has no positive or no negative journey the negated training loss is used
/// as the selection score instead.
///
/// Throws NumericalAbort on a non-finite batch loss.
TrainHistory train_model(ModelParams& model, const std::vector<PatientJourney>& train,
                         const std::vector<PatientJourney>& valid, const ClassWeights& weights,
                         const TrainConfig& config, const EpochCallback& on_epoch = {});

MetricsReport evaluate_model(ModelParams& model, const std::vector<PatientJourney>& journeys, std::uint64_t seed);

}  // namespace tattnet
