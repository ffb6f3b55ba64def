#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tattnet/autodiff.hpp"
#include "tattnet/init.hpp"
#include "tattnet/parameters.hpp"

namespace tattnet {

/// Multi-head self-attention across the N feature rows of a journey matrix
/// r[N x T], followed by a row-wise feed-forward sub-layer. Each sub-layer is
/// wrapped as LayerNorm(input + sublayer(input)) with normalization over the
/// feature axis.
///
/// Queries and keys are projected from whole T-length feature rows, so the
/// attention map xi is N x N: row i is the distribution of feature i over the
/// features it attends to.
struct StackedAttentionDims {
  std::size_t features = 0;    // N
  std::size_t max_visits = 0;  // T_max
  std::size_t heads = 2;
  std::size_t key_dim = 16;
  std::size_t ffn_dim = 64;
  std::size_t depth = 1;
};

struct AttentionHeadParams {
  Parameter query;  // d_K x T_max
  Parameter key;    // d_K x T_max
  Parameter value;  // T_max x T_max
};

struct StackedBlockParams {
  std::vector<AttentionHeadParams> heads;
  Parameter output;          // N x (heads * N)
  Parameter ffn_in_weight;   // d_ff x T_max
  Parameter ffn_in_bias;     // d_ff
  Parameter ffn_out_weight;  // T_max x d_ff
  Parameter ffn_out_bias;    // T_max
  Parameter norm1_scale, norm1_shift;  // N
  Parameter norm2_scale, norm2_shift;  // N
};

struct StackedAttentionParams {
  StackedAttentionDims dims;
  std::vector<StackedBlockParams> blocks;

  static StackedAttentionParams create(const StackedAttentionDims& dims);
  void initialize(Rng& rng);
  void visit(const std::string& prefix, const ParameterVisitor& visitor);
};

struct StackedAttentionOutput {
  Var h;                // N x T
  std::vector<Var> xi;  // per head of the first block, N x N
};

/// Row-softmaxed scaled dot products of one head. `key_observed`, when given,
/// masks key features whose entry is false.
Var attention_weights(Var r, AttentionHeadParams& head, std::size_t key_dim,
                      const std::vector<bool>* key_observed = nullptr);

/// head(r)[i] = sum_j xi(i, j) * (W_V r_j^T)^T.
Var head_output(Var r, Var xi, AttentionHeadParams& head);

/// W_o [head_1(r); ...; head_m(r)] for one block.
Var multi_head_attention(Var r, StackedBlockParams& block, std::size_t key_dim, std::vector<Var>* xi_out = nullptr,
                         const std::vector<bool>* key_observed = nullptr);

StackedAttentionOutput stacked_attention_forward(Var r, StackedAttentionParams& params,
                                                 const std::vector<bool>* key_observed = nullptr);

}  // namespace tattnet
