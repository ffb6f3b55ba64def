#include "tattnet/temporal_encoding.hpp"

#include <string>
#include <vector>

#include "tattnet/errors.hpp"

namespace tattnet {

TimeEncoderParams TimeEncoderParams::create(std::size_t features) {
  if (features == 0) throw ContractError("time encoder needs N >= 1");
  TimeEncoderParams p;
  p.weight = Parameter({features, 1});
  p.bias = Parameter({features});
  return p;
}

void TimeEncoderParams::initialize(Rng& rng) {
  glorot_uniform(weight, rng);
  constant_init(bias, 0.0);
}

void TimeEncoderParams::visit(const std::string& prefix, const ParameterVisitor& visitor) {
  visitor(prefix + ".weight", weight);
  visitor(prefix + ".bias", bias);
}

ShortTermParams ShortTermParams::create(std::size_t features) {
  if (features == 0) throw ContractError("short-term module needs N >= 1");
  ShortTermParams p;
  p.kernels = Parameter({features, kKernelSize});
  p.kernel_bias = Parameter({features});
  p.attention_weight = Parameter({features, features});
  p.attention_bias = Parameter({features});
  return p;
}

void ShortTermParams::initialize(Rng& rng) {
  // Each row is an independent 3 x 1 kernel.
  glorot_uniform(kernels, kKernelSize, 1, rng);
  constant_init(kernel_bias, 0.0);
  glorot_uniform(attention_weight, rng);
  constant_init(attention_bias, 0.0);
}

void ShortTermParams::visit(const std::string& prefix, const ParameterVisitor& visitor) {
  visitor(prefix + ".kernels", kernels);
  visitor(prefix + ".kernel_bias", kernel_bias);
  visitor(prefix + ".attention_weight", attention_weight);
  visitor(prefix + ".attention_bias", attention_bias);
}

Tensor consecutive_intervals(const Tensor& mu) {
  if (mu.rank() != 1 || mu.size() == 0) throw DimensionError("timestamps must be a non-empty vector");
  const std::size_t T = mu.size();
  Tensor gaps({1, T - 1});
  for (std::size_t t = 1; t < T; ++t) {
    const double d = mu[t] - mu[t - 1];
    if (d < 0.0) {
      throw DataError("timestamps decrease between visits " + std::to_string(t) + " and " + std::to_string(t + 1));
    }
    gaps[t - 1] = d;
  }
  return gaps;
}

Var encode_intervals(Tape& tape, const Tensor& mu, TimeEncoderParams& params) {
  Var gaps = tape.constant(consecutive_intervals(mu));
  Var encoded = ad::matmul(tape.param(params.weight), gaps);
  return ad::add_col_broadcast(encoded, tape.param(params.bias));
}

Var interleave(Var h, Var delta_enc) {
  if (h.shape().size() != 2 || delta_enc.shape().size() != 2 || h.dim(0) != delta_enc.dim(0) || h.dim(1) == 0 ||
      delta_enc.dim(1) + 1 != h.dim(1)) {
    throw DimensionError("interleave: visits " + shape_string(h.shape()) + " vs intervals " +
                         shape_string(delta_enc.shape()));
  }
  const std::size_t T = h.dim(1);
  // Source columns: h occupies [0, T), intervals occupy [T, 2T-1).
  std::vector<long> index(interleaved_width(T), -1);
  for (std::size_t t = 1; t <= T; ++t) {
    index[2 * t] = static_cast<long>(t - 1);
    if (t >= 2) index[2 * t - 1] = static_cast<long>(T + t - 2);
  }
  Var both = ad::concat({h, delta_enc}, 1);
  return ad::gather_columns(both, std::move(index));
}

Tensor deinterleave(const Tensor& h_prime) {
  if (h_prime.rank() != 2 || h_prime.cols() < 3 || h_prime.cols() % 2 == 0) {
    throw DimensionError("deinterleave needs N x (2T+1), got " + shape_string(h_prime.shape()));
  }
  const std::size_t N = h_prime.rows(), T = (h_prime.cols() - 1) / 2;
  Tensor h({N, T});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 1; t <= T; ++t) h(n, t - 1) = h_prime(n, 2 * t);
  return h;
}

ShortTermOutput short_term_forward(Var h_prime, ShortTermParams& params, const Tensor* observed) {
  Tape& tape = h_prime.tape();
  const std::size_t N = params.kernels.value.rows();
  if (h_prime.shape().size() != 2 || h_prime.dim(0) != N || h_prime.dim(1) < 3 || h_prime.dim(1) % 2 == 0) {
    throw DimensionError("short-term input " + shape_string(h_prime.shape()) + " is not N x (2T+1) with N=" +
                         std::to_string(N));
  }
  ShortTermOutput out;
  out.k = ad::relu(ad::depthwise_conv1d(h_prime, tape.param(params.kernels), tape.param(params.kernel_bias),
                                        ShortTermParams::kStride));
  Var logits =
      ad::add_col_broadcast(ad::matmul(tape.param(params.attention_weight), out.k), tape.param(params.attention_bias));
  ad::EmptySlice empty = ad::EmptySlice::kError;
  if (observed) {
    if (observed->shape() != out.k.shape()) {
      throw DimensionError("observation mask " + shape_string(observed->shape()) + " vs feature map " +
                           shape_string(out.k.shape()));
    }
    Tensor mask(observed->shape());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (*observed)[i] != 0.0 ? 0.0 : kMaskedLogit;
    logits = ad::add(logits, tape.constant(std::move(mask)));
    empty = ad::EmptySlice::kZero;
  }
  out.alpha = ad::softmax(logits, 0, empty);
  out.k_star = ad::add(ad::mul(out.alpha, out.k), out.k);
  return out;
}

}  // namespace tattnet
