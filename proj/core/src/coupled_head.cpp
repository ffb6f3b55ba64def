#include "tattnet/coupled_head.hpp"

#include <string>

#include "binding.hpp"
#include "tattnet/errors.hpp"

namespace tattnet {

CoupledParams CoupledParams::create(const CoupledDims& dims) {
  if (dims.features == 0 || dims.max_visits == 0 || dims.coupled == 0) {
    throw ContractError("coupled head needs N, T_max, d_u >= 1");
  }
  CoupledParams p;
  p.dims = dims;
  p.fuse_weight = Parameter({dims.coupled, 2 * dims.features});
  p.fuse_bias = Parameter({dims.coupled});
  if (dims.attention_pooling) {
    p.pool_weight = Parameter({dims.max_visits, dims.max_visits});
    p.pool_bias = Parameter({dims.max_visits});
  }
  p.class_weight = Parameter({2, dims.coupled});
  p.class_bias = Parameter({2});
  return p;
}

void CoupledParams::initialize(Rng& rng) {
  glorot_uniform(fuse_weight, rng);
  constant_init(fuse_bias, 0.0);
  if (dims.attention_pooling) {
    glorot_uniform(pool_weight, rng);
    constant_init(pool_bias, 0.0);
  }
  glorot_uniform(class_weight, rng);
  constant_init(class_bias, 0.0);
}

void CoupledParams::visit(const std::string& prefix, const ParameterVisitor& visitor) {
  visitor(prefix + ".fuse_weight", fuse_weight);
  visitor(prefix + ".fuse_bias", fuse_bias);
  if (dims.attention_pooling) {
    visitor(prefix + ".pool_weight", pool_weight);
    visitor(prefix + ".pool_bias", pool_bias);
  }
  visitor(prefix + ".class_weight", class_weight);
  visitor(prefix + ".class_bias", class_bias);
}

Var couple(Var short_term, Var long_term, CoupledParams& params) {
  if (short_term.shape() != long_term.shape() || short_term.shape().size() != 2 ||
      short_term.dim(0) != params.dims.features) {
    throw DimensionError("couple: " + shape_string(short_term.shape()) + " and " + shape_string(long_term.shape()) +
                         " with N=" + std::to_string(params.dims.features));
  }
  Tape& tape = short_term.tape();
  Var stacked = ad::concat({short_term, long_term}, 0);
  Var fused = ad::add_col_broadcast(ad::matmul(tape.param(params.fuse_weight), stacked), tape.param(params.fuse_bias));
  return ad::relu(fused);
}

PoolOutput attention_pool(Var u, CoupledParams& params) {
  if (!params.dims.attention_pooling) throw ContractError("attention pooling parameters were not allocated");
  Tape& tape = u.tape();
  const std::size_t T = u.dim(1);
  if (T == 0 || T > params.dims.max_visits) {
    throw DimensionError("pool: " + std::to_string(T) + " visits exceeds T_max=" + std::to_string(params.dims.max_visits));
  }
  Var w = detail::bind_leading(tape, params.pool_weight, T, T);
  Var b = detail::bind_leading(tape, params.pool_bias, T);
  PoolOutput out;
  out.beta = ad::softmax(ad::add_row_broadcast(ad::matmul(u, w), b), 1);
  out.pooled = ad::sum_axis(ad::mul(out.beta, u), 1);
  return out;
}

PoolOutput mean_pool(Var u) {
  const std::size_t T = u.dim(1);
  PoolOutput out;
  out.beta = u.tape().constant(Tensor(u.shape(), 1.0 / static_cast<double>(T)));
  out.pooled = ad::scale(ad::sum_axis(u, 1), 1.0 / static_cast<double>(T));
  return out;
}

PoolOutput visit_pool(Var u, std::size_t visit) {
  const std::size_t R = u.dim(0), T = u.dim(1);
  if (visit >= T) throw DimensionError("visit_pool index out of range");
  Tensor onehot({R, T});
  for (std::size_t r = 0; r < R; ++r) onehot(r, visit) = 1.0;
  PoolOutput out;
  out.beta = u.tape().constant(std::move(onehot));
  out.pooled = ad::reshape(ad::slice(u, 1, visit, visit + 1), {R});
  return out;
}

Var predict(Var pooled, CoupledParams& params) {
  Tape& tape = pooled.tape();
  const std::size_t D = params.dims.coupled;
  if (pooled.value().size() != D) throw DimensionError("predict: pooled vector " + shape_string(pooled.shape()));
  Var logits = ad::matmul(tape.param(params.class_weight), ad::reshape(pooled, {D, 1}));
  logits = ad::add(ad::reshape(logits, {2}), tape.param(params.class_bias));
  return ad::softmax(logits, 0);
}

Var journey_loss(Var y_hat, int label, const ClassWeights& weights) {
  if (label != 0 && label != 1) throw ContractError("label must be 0 or 1, got " + std::to_string(label));
  if (y_hat.value().size() != 2) throw DimensionError("loss expects a 2-way distribution");
  const double w = label == 1 ? weights.positive : weights.negative;
  Var p = ad::pick(y_hat, static_cast<std::size_t>(label));
  return ad::scale(ad::log(p, kProbabilityFloor), -w);
}

}  // namespace tattnet
