#pragma once

#include <cstdint>
#include <random>

#include "tattnet/autodiff.hpp"

namespace tattnet {

using Rng = std::mt19937_64;

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)), fan_in = cols and
/// fan_out = rows of a rank-2 parameter.
void glorot_uniform(Parameter& p, Rng& rng);

/// Uniform(-a, a) with an explicit fan pair, for parameters stored in a
/// packed layout (e.g. N convolution kernels in one N x 3 matrix).
void glorot_uniform(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

void constant_init(Parameter& p, double value);

}  // namespace tattnet
