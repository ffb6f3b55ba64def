#include "tattnet/long_term_attention.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "tattnet/errors.hpp"

namespace tattnet {

LongTermParams LongTermParams::create(const LongTermDims& dims) {
  if (dims.features == 0 || dims.hidden == 0) throw ContractError("long-term module needs N >= 1 and d_h >= 1");
  const std::size_t N = dims.features, H = dims.hidden;
  LongTermParams p;
  p.dims = dims;
  p.source_weight = Parameter({N, N});
  p.target_weight = Parameter({N, N});
  p.gap_weight = Parameter({N, 1});
  p.pair_bias = Parameter({N});
  p.hidden_weight = Parameter({H, N});
  p.diagnosis_weight = Parameter({H, dims.diagnosis_codes});
  p.procedure_weight = Parameter({H, dims.procedure_codes});
  p.hidden_bias = Parameter({H});
  p.output_weight = Parameter({N, H});
  p.output_bias = Parameter({N});
  return p;
}

void LongTermParams::initialize(Rng& rng) {
  glorot_uniform(source_weight, rng);
  glorot_uniform(target_weight, rng);
  glorot_uniform(gap_weight, rng);
  constant_init(pair_bias, 0.0);
  glorot_uniform(hidden_weight, rng);
  glorot_uniform(diagnosis_weight, rng);
  glorot_uniform(procedure_weight, rng);
  constant_init(hidden_bias, 0.0);
  glorot_uniform(output_weight, rng);
  constant_init(output_bias, 0.0);
}

void LongTermParams::visit(const std::string& prefix, const ParameterVisitor& visitor) {
  visitor(prefix + ".source_weight", source_weight);
  visitor(prefix + ".target_weight", target_weight);
  visitor(prefix + ".gap_weight", gap_weight);
  visitor(prefix + ".pair_bias", pair_bias);
  visitor(prefix + ".hidden_weight", hidden_weight);
  visitor(prefix + ".diagnosis_weight", diagnosis_weight);
  visitor(prefix + ".procedure_weight", procedure_weight);
  visitor(prefix + ".hidden_bias", hidden_bias);
  visitor(prefix + ".output_weight", output_weight);
  visitor(prefix + ".output_bias", output_bias);
}

Tensor build_forward_mask(std::size_t visits) {
  if (visits == 0) throw ContractError("forward mask of an empty journey");
  Tensor mask({visits, visits}, kMaskedLogit);
  for (std::size_t i = 0; i < visits; ++i)
    for (std::size_t j = i + 1; j < visits; ++j) mask(i, j) = 0.0;
  return mask;
}

namespace {

double activate(Activation a, double v) {
  return a == Activation::kTanh ? std::tanh(v) : 1.0 / (1.0 + std::exp(-v));
}

Var activate(Activation a, Var v) { return a == Activation::kTanh ? ad::tanh(v) : ad::sigmoid(v); }

void check_codes(const Tensor& r_c, const Tensor& r_d, const LongTermDims& dims) {
  if (r_c.size() != dims.diagnosis_codes || r_d.size() != dims.procedure_codes) {
    throw DimensionError("static code vectors " + shape_string(r_c.shape()) + ", " + shape_string(r_d.shape()) +
                         " do not match g_c=" + std::to_string(dims.diagnosis_codes) +
                         ", g_d=" + std::to_string(dims.procedure_codes));
  }
}

}  // namespace

Tensor pair_score(const Tensor& h_i, const Tensor& h_j, double gap, const Tensor& r_c, const Tensor& r_d,
                  const LongTermParams& params) {
  const LongTermDims& d = params.dims;
  const std::size_t N = d.features, H = d.hidden;
  if (h_i.size() != N || h_j.size() != N) {
    throw DimensionError("pair_score visit vectors " + shape_string(h_i.shape()) + ", " + shape_string(h_j.shape()) +
                         " vs N=" + std::to_string(N));
  }
  check_codes(r_c, r_d, d);
  std::vector<double> first(N);
  for (std::size_t l = 0; l < N; ++l) {
    double s = params.pair_bias.value[l] + params.gap_weight.value(l, 0) * gap;
    for (std::size_t k = 0; k < N; ++k)
      s += params.source_weight.value(l, k) * h_i[k] + params.target_weight.value(l, k) * h_j[k];
    first[l] = activate(d.activation, s);
  }
  std::vector<double> second(H);
  for (std::size_t q = 0; q < H; ++q) {
    double s = params.hidden_bias.value[q];
    for (std::size_t l = 0; l < N; ++l) s += params.hidden_weight.value(q, l) * first[l];
    for (std::size_t c = 0; c < d.diagnosis_codes; ++c) s += params.diagnosis_weight.value(q, c) * r_c[c];
    for (std::size_t c = 0; c < d.procedure_codes; ++c) s += params.procedure_weight.value(q, c) * r_d[c];
    second[q] = activate(d.activation, s);
  }
  Tensor score({N});
  for (std::size_t l = 0; l < N; ++l) {
    double s = params.output_bias.value[l];
    for (std::size_t q = 0; q < H; ++q) s += params.output_weight.value(l, q) * second[q];
    score[l] = s;
  }
  return score;
}

LongTermOutput long_term_forward(Var h, const Tensor& mu, const Tensor& r_c, const Tensor& r_d,
                                 LongTermParams& params) {
  const LongTermDims& d = params.dims;
  Tape& tape = h.tape();
  if (h.shape().size() != 2 || h.dim(0) != d.features || h.dim(1) == 0 || mu.size() != h.dim(1)) {
    throw DimensionError("long-term input " + shape_string(h.shape()) + " with " + std::to_string(mu.size()) +
                         " timestamps is inconsistent with N=" + std::to_string(d.features));
  }
  check_codes(r_c, r_d, d);
  const std::size_t T = h.dim(1);

  // Only pairs the forward mask leaves open are scored; the rest stay at the mask value.
  const Tensor mask = build_forward_mask(T);
  std::vector<ad::VisitPair> pairs;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < T; ++j)
      if (mask(i, j) == 0.0) pairs.push_back({i, j});
  const std::size_t P = pairs.size();
  Tensor gaps({1, P});
  for (std::size_t k = 0; k < P; ++k) gaps[k] = mu[pairs[k][1]] - mu[pairs[k][0]];

  Var source = ad::matmul(tape.param(params.source_weight), h);
  Var target = ad::matmul(tape.param(params.target_weight), h);
  Var pair_sum = ad::pair_gather(source, target, pairs);
  Var gap_term = ad::matmul(tape.param(params.gap_weight), tape.constant(std::move(gaps)));
  Var first = activate(d.activation, ad::add_col_broadcast(ad::add(pair_sum, gap_term), tape.param(params.pair_bias)));

  Var codes = ad::add(ad::matmul(tape.param(params.diagnosis_weight), tape.constant(r_c.reshaped({r_c.size(), 1}))),
                      ad::matmul(tape.param(params.procedure_weight), tape.constant(r_d.reshaped({r_d.size(), 1}))));
  Var static_bias = ad::add(ad::reshape(codes, {d.hidden}), tape.param(params.hidden_bias));
  Var second =
      activate(d.activation, ad::add_col_broadcast(ad::matmul(tape.param(params.hidden_weight), first), static_bias));
  Var scores = ad::add_col_broadcast(ad::matmul(tape.param(params.output_weight), second),
                                     tape.param(params.output_bias));
  Var masked = ad::scatter_pairs(scores, pairs, T, kMaskedLogit);

  LongTermOutput out;
  out.weights = ad::softmax(masked, 1, ad::EmptySlice::kZero);
  out.e = ad::contract_sources(out.weights, h);
  out.e_star = ad::add(out.e, h);
  return out;
}

}  // namespace tattnet
