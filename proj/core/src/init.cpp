#include "tattnet/init.hpp"

#include <cmath>

#include "tattnet/errors.hpp"

namespace tattnet {

void glorot_uniform(Parameter& p, Rng& rng) {
  if (p.value.rank() != 2) throw DimensionError("glorot_uniform needs a matrix, got " + shape_string(p.value.shape()));
  glorot_uniform(p, p.value.cols(), p.value.rows(), rng);
}

void glorot_uniform(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : p.value.data()) v = dist(rng);
  p.grad = Tensor(p.value.shape());
}

void constant_init(Parameter& p, double value) {
  p.value.fill(value);
  p.grad = Tensor(p.value.shape());
}

}  // namespace tattnet
