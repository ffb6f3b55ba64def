#pragma once

#include <cstddef>

#include "tattnet/autodiff.hpp"
#include "tattnet/init.hpp"
#include "tattnet/parameters.hpp"

namespace tattnet {

/// Linear embedding of consecutive visit gaps into the feature space:
/// column t-1 of the encoding is W_delta * (mu_t - mu_{t-1}) + b_delta.
struct TimeEncoderParams {
  Parameter weight;  // N x 1
  Parameter bias;    // N

  static TimeEncoderParams create(std::size_t features);
  void initialize(Rng& rng);
  void visit(const std::string& prefix, const ParameterVisitor& visitor);
};

/// Per-feature kernel-3 / stride-2 convolution over the interleaved sequence
/// plus the feature-axis attention that produces alpha and k*.
struct ShortTermParams {
  Parameter kernels;           // N x 3, row j is the kernel of feature j
  Parameter kernel_bias;       // N
  Parameter attention_weight;  // N x N
  Parameter attention_bias;    // N

  static constexpr std::size_t kKernelSize = 3;
  static constexpr std::size_t kStride = 2;

  static ShortTermParams create(std::size_t features);
  void initialize(Rng& rng);
  void visit(const std::string& prefix, const ParameterVisitor& visitor);
};

/// mu_t - mu_{t-1} for t = 2..T. Throws DataError if mu decreases.
Tensor consecutive_intervals(const Tensor& mu);

/// N x (T-1) interval embeddings.
Var encode_intervals(Tape& tape, const Tensor& mu, TimeEncoderParams& params);

constexpr std::size_t interleaved_width(std::size_t visits) { return 2 * visits + 1; }
constexpr std::size_t conv_output_width(std::size_t length) {
  return (length - ShortTermParams::kKernelSize) / ShortTermParams::kStride + 1;
}

/// [0, 0, h_1, d_2, h_2, ..., d_T, h_T] as columns of an N x (2T+1) matrix,
/// where d_t is the encoded gap preceding visit t. The slot before h_1 has no
/// preceding interval and is zero like the padded h_0.
Var interleave(Var h, Var delta_enc);

/// Recovers h[N x T] from the interleaved layout.
Tensor deinterleave(const Tensor& h_prime);

struct ShortTermOutput {
  Var k;       // N x T, ReLU feature maps
  Var alpha;   // N x T, columns are distributions over features
  Var k_star;  // alpha . k + k
};

/// `observed` (N x T of 0/1), when given, masks alpha logits at imputed
/// cells. A column with no observed cell gets all-zero weights.
ShortTermOutput short_term_forward(Var h_prime, ShortTermParams& params, const Tensor* observed = nullptr);

}  // namespace tattnet
