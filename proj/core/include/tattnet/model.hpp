#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tattnet/autodiff.hpp"
#include "tattnet/coupled_head.hpp"
#include "tattnet/journey.hpp"
#include "tattnet/long_term_attention.hpp"
#include "tattnet/stacked_attention.hpp"
#include "tattnet/temporal_encoding.hpp"

namespace tattnet {

struct ModelConfig {
  std::size_t features = 16;         // N
  std::size_t max_visits = 48;       // T_max
  std::size_t heads = 2;             // m
  std::size_t key_dim = 16;          // d_K
  std::size_t ffn_dim = 64;          // d_ff
  std::size_t stacked_depth = 1;
  std::size_t hidden = 32;           // d_h
  std::size_t coupled = 64;          // d_u
  std::size_t diagnosis_codes = 32;  // g_c
  std::size_t procedure_codes = 32;  // g_d
  Activation activation = Activation::kTanh;

  // Ablations: alpha, beta, gamma, delta variants respectively.
  bool disable_stacked = false;
  bool disable_short = false;
  bool disable_long = false;
  bool disable_coupled = false;

  std::uint64_t seed = 0;

  /// Throws ContractError on zero extents or with both temporal paths off.
  void validate() const;
};

/// "full", "alpha", "beta", "gamma", "delta", or a '+'-joined combination.
std::string variant_name(const ModelConfig& config);

/// Every learnable tensor of the network. Disabled modules are not allocated.
struct ModelParams {
  ModelConfig config;
  std::optional<StackedAttentionParams> stacked;
  std::optional<TimeEncoderParams> time_encoder;
  std::optional<ShortTermParams> short_term;
  std::optional<LongTermParams> long_term;
  CoupledParams coupled;

  /// Deterministic order shared by checkpoints, the optimizer and gradient checks.
  void visit(const ParameterVisitor& visitor);
  std::size_t parameter_count();
  void zero_grad();
};

/// Allocates and initializes parameters from config.seed.
ModelParams assemble_model(const ModelConfig& config);

struct ForwardOptions {
  /// Mask imputed cells in xi (key features never observed) and alpha.
  bool apply_observation_mask = false;
  /// Test hook: pool only the representation of this visit instead of
  /// the configured pooling.
  std::optional<std::size_t> pool_visit;
};

/// Everything a forward pass produces, kept for export and tests.
struct ForwardTrace {
  Var h;                         // N x T
  std::vector<Var> xi;           // per head, N x N (empty without stacked attention)
  std::optional<ShortTermOutput> short_term;
  std::optional<LongTermOutput> long_term;
  Var u;                         // d_u x T
  PoolOutput pool;
  Var y_hat;                     // 2
};

ForwardTrace forward(Tape& tape, ModelParams& model, const PatientJourney& journey,
                     const ForwardOptions& options = {});

/// Runs everything after the visit embeddings h, for callers that supply h.
ForwardTrace forward_from_embeddings(Var h, ModelParams& model, const PatientJourney& journey,
                                     const ForwardOptions& options = {});

/// Positive-class probability of one journey.
double predict_positive(ModelParams& model, const PatientJourney& journey);

/// Checks that a journey fits the model's N, T_max, g_c and g_d.
void check_compatible(const ModelConfig& config, const PatientJourney& journey);

}  // namespace tattnet
