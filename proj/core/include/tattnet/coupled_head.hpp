#pragma once

#include <cstddef>

#include "tattnet/autodiff.hpp"
#include "tattnet/init.hpp"
#include "tattnet/parameters.hpp"

namespace tattnet {

struct CoupledDims {
  std::size_t features = 0;    // N
  std::size_t max_visits = 0;  // T_max
  std::size_t coupled = 64;    // d_u
  bool attention_pooling = true;
};

/// Fusion of k* and e* per visit, attention pooling over visits, and the
/// two-way softmax classifier.
struct CoupledParams {
  CoupledDims dims;
  Parameter fuse_weight;  // W_u, d_u x 2N
  Parameter fuse_bias;    // b_u, d_u
  Parameter pool_weight;  // W_beta, T_max x T_max (absent without attention pooling)
  Parameter pool_bias;    // b_beta, T_max
  Parameter class_weight; // W_y, 2 x d_u
  Parameter class_bias;   // b_y, 2

  static CoupledParams create(const CoupledDims& dims);
  void initialize(Rng& rng);
  void visit(const std::string& prefix, const ParameterVisitor& visitor);
};

struct ClassWeights {
  double negative = 1.0;
  double positive = 1.0;
};

/// Lower clamp on the true-class probability inside the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// u[:, t] = ReLU(W_u [short[:, t]; long[:, t]] + b_u), shape d_u x T.
Var couple(Var short_term, Var long_term, CoupledParams& params);

struct PoolOutput {
  Var pooled;  // u*, d_u
  Var beta;    // d_u x T; rows are distributions over visits
};

/// beta = softmax over time of (u W_beta + b_beta); u* = sum_t beta[:, t] . u[:, t].
PoolOutput attention_pool(Var u, CoupledParams& params);

/// Uniform weights 1/T; used when attention pooling is disabled.
PoolOutput mean_pool(Var u);

/// Selects u[:, visit]; beta is the one-hot column at `visit`.
PoolOutput visit_pool(Var u, std::size_t visit);

/// softmax(W_y u* + b_y); element 1 is the positive-class probability.
Var predict(Var pooled, CoupledParams& params);

/// -w_y * log(max(y_hat[y], floor)).
Var journey_loss(Var y_hat, int label, const ClassWeights& weights);

}  // namespace tattnet
