#pragma once

#include <cstddef>

#include "tattnet/autodiff.hpp"
#include "tattnet/init.hpp"
#include "tattnet/parameters.hpp"

namespace tattnet {

enum class Activation { kTanh, kSigmoid };

struct LongTermDims {
  std::size_t features = 0;         // N
  std::size_t hidden = 32;          // d_h
  std::size_t diagnosis_codes = 0;  // g_c
  std::size_t procedure_codes = 0;  // g_d
  Activation activation = Activation::kTanh;
};

/// Two-layer pairwise scoring network. For a source visit i and target j:
///
///   f1 = act(W11 h_i + W12 h_j + W13 (mu_j - mu_i) + b1)
///   score = W31 act(W21 f1 + W22 r_c + W23 r_d + b2) + b3
///
/// The score is a vector over features, so every feature gets its own
/// distribution over source visits.
struct LongTermParams {
  LongTermDims dims;
  Parameter source_weight;     // W11, N x N
  Parameter target_weight;     // W12, N x N
  Parameter gap_weight;        // W13, N x 1
  Parameter pair_bias;         // b1, N
  Parameter hidden_weight;     // W21, d_h x N
  Parameter diagnosis_weight;  // W22, d_h x g_c
  Parameter procedure_weight;  // W23, d_h x g_d
  Parameter hidden_bias;       // b2, d_h
  Parameter output_weight;     // W31, N x d_h
  Parameter output_bias;       // b3, N

  static LongTermParams create(const LongTermDims& dims);
  void initialize(Rng& rng);
  void visit(const std::string& prefix, const ParameterVisitor& visitor);
};

/// T x T forward mask: 0 where source i < target j, kMaskedLogit elsewhere.
Tensor build_forward_mask(std::size_t visits);

/// Unmasked score vector for one (source, target) pair, evaluated directly
/// without a tape.
Tensor pair_score(const Tensor& h_i, const Tensor& h_j, double gap, const Tensor& r_c, const Tensor& r_d,
                  const LongTermParams& params);

struct LongTermOutput {
  Var weights;  // P, N x T x T: weights(l, i, j) is the weight of source i for target j on feature l
  Var e;        // N x T
  Var e_star;   // e + h
};

/// The first visit has no earlier source; its context e_1 is defined as zero
/// (all of its weights are zero), so e*_1 = h_1.
LongTermOutput long_term_forward(Var h, const Tensor& mu, const Tensor& r_c, const Tensor& r_d,
                                 LongTermParams& params);

}  // namespace tattnet
