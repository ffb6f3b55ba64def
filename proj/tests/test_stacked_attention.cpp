#include <gtest/gtest.h>

#include <tattnet/errors.hpp>
#include <tattnet/stacked_attention.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "support/test_support.hpp"

using namespace tattnet;
using tattnet::testing::check_module_gradients;
using tattnet::testing::probe;
using tattnet::testing::random_tensor;

namespace {

StackedAttentionParams make_params(std::size_t N, std::size_t T, std::size_t heads, std::size_t key_dim,
                                   std::uint64_t seed, std::size_t ffn = 6) {
  StackedAttentionDims d;
  d.features = N;
  d.max_visits = T;
  d.heads = heads;
  d.key_dim = key_dim;
  d.ffn_dim = ffn;
  StackedAttentionParams p = StackedAttentionParams::create(d);
  Rng rng(seed);
  p.initialize(rng);
  return p;
}

Tensor reference_weights(const Tensor& r, const AttentionHeadParams& head, std::size_t key_dim) {
  const std::size_t N = r.dim(0), T = r.dim(1);
  auto project = [&](const Tensor& w, std::size_t row) {
    std::vector<double> out(key_dim, 0.0);
    for (std::size_t k = 0; k < key_dim; ++k)
      for (std::size_t t = 0; t < T; ++t) out[k] += w(k, t) * r(row, t);
    return out;
  };
  Tensor xi({N, N});
  for (std::size_t i = 0; i < N; ++i) {
    const std::vector<double> q = project(head.query.value, i);
    std::vector<double> logits(N);
    for (std::size_t j = 0; j < N; ++j) {
      const std::vector<double> k = project(head.key.value, j);
      logits[j] = std::inner_product(q.begin(), q.end(), k.begin(), 0.0) / std::sqrt(double(key_dim));
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    for (std::size_t j = 0; j < N; ++j) xi(i, j) = std::exp(logits[j] - mx) / z;
  }
  return xi;
}

Tensor reference_head(const Tensor& r, const Tensor& xi, const Tensor& wv) {
  const std::size_t N = r.dim(0), T = r.dim(1);
  Tensor out({N, T});
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        double v = 0.0;
        for (std::size_t u = 0; u < T; ++u) v += wv(t, u) * r(j, u);
        s += xi(i, j) * v;
      }
      out(i, t) = s;
    }
  return out;
}

Tensor reference_layer_norm(const Tensor& x) {
  const std::size_t R = x.dim(0), C = x.dim(1);
  Tensor y({R, C});
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t r = 0; r < R; ++r) mean += x(r, c) / double(R);
    for (std::size_t r = 0; r < R; ++r) var += (x(r, c) - mean) * (x(r, c) - mean) / double(R);
    for (std::size_t r = 0; r < R; ++r) y(r, c) = (x(r, c) - mean) / std::sqrt(var + 1e-5);
  }
  return y;
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

void zero_all(StackedAttentionParams& p) {
  p.visit("s", [](const std::string& name, Parameter& q) {
    if (name.find("norm") == std::string::npos) q.value.fill(0.0);
  });
}

}  // namespace

TEST(StackedAttention, ShapesFollowConfiguration) {
  StackedAttentionParams p = make_params(5, 7, 3, 4, 1, 9);
  ASSERT_EQ(p.blocks.size(), 1u);
  const StackedBlockParams& b = p.blocks[0];
  ASSERT_EQ(b.heads.size(), 3u);
  EXPECT_EQ(b.heads[0].query.value.shape(), (Shape{4, 7}));
  EXPECT_EQ(b.heads[0].key.value.shape(), (Shape{4, 7}));
  EXPECT_EQ(b.heads[0].value.value.shape(), (Shape{7, 7}));
  EXPECT_EQ(b.output.value.shape(), (Shape{5, 15}));
  EXPECT_EQ(b.ffn_in_weight.value.shape(), (Shape{9, 7}));
  EXPECT_EQ(b.ffn_out_weight.value.shape(), (Shape{7, 9}));
}

TEST(StackedAttention, ZeroProjectionsGiveUniformWeights) {
  StackedAttentionParams p = make_params(4, 5, 1, 3, 2);
  p.blocks[0].heads[0].query.value.fill(0.0);
  p.blocks[0].heads[0].key.value.fill(0.0);
  std::mt19937_64 rng(2);
  Tape tape;
  const Tensor xi = attention_weights(tape.constant(random_tensor({4, 5}, rng)), p.blocks[0].heads[0], 3).value();
  for (double v : xi.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(StackedAttention, ClosedFormTwoFeatureWeights) {
  StackedAttentionParams p = make_params(2, 2, 1, 1, 3);
  AttentionHeadParams& head = p.blocks[0].heads[0];
  head.query.value = Tensor::matrix({{1.0, 0.0}});
  head.key.value = Tensor::matrix({{0.0, std::log(3.0)}});
  Tape tape;
  const Tensor xi = attention_weights(tape.constant(Tensor::matrix({{1, 0}, {0, 1}})), head, 1).value();
  EXPECT_NEAR(xi(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(xi(0, 1), 0.75, 1e-15);
}

TEST(StackedAttention, WeightsMatchLoopOracleAndAreDistributions) {
  StackedAttentionParams p = make_params(6, 5, 2, 3, 11);
  std::mt19937_64 rng(11);
  const Tensor r = random_tensor({6, 5}, rng);
  for (AttentionHeadParams& head : p.blocks[0].heads) {
    Tape tape;
    const Tensor xi = attention_weights(tape.constant(r), head, 3).value();
    const Tensor ref = reference_weights(r, head, 3);
    for (std::size_t i = 0; i < 6; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_NEAR(xi(i, j), ref(i, j), 1e-12);
        EXPECT_GE(xi(i, j), 0.0);
        sum += xi(i, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(StackedAttention, HeadOutputMatchesLoopOracle) {
  StackedAttentionParams p = make_params(4, 6, 2, 3, 5);
  std::mt19937_64 rng(5);
  const Tensor r = random_tensor({4, 6}, rng);
  for (AttentionHeadParams& head : p.blocks[0].heads) {
    Tape tape;
    Var rv = tape.constant(r);
    Var xi = attention_weights(rv, head, 3);
    const Tensor out = head_output(rv, xi, head).value();
    const Tensor ref = reference_head(r, xi.value(), head.value.value);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-12);
  }
}

TEST(StackedAttention, UniformWeightsWithIdentityValueAverageRows) {
  StackedAttentionParams p = make_params(3, 4, 1, 2, 6);
  AttentionHeadParams& head = p.blocks[0].heads[0];
  head.value.value = identity(4);
  std::mt19937_64 rng(6);
  const Tensor r = random_tensor({3, 4}, rng);
  Tape tape;
  Var rv = tape.constant(r);
  const Tensor out = head_output(rv, tape.constant(Tensor({3, 3}, 1.0 / 3.0)), head).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(out(i, t), (r(0, t) + r(1, t) + r(2, t)) / 3.0, 1e-15);
}

TEST(StackedAttention, OneHotWeightsSelectValueRow) {
  StackedAttentionParams p = make_params(3, 4, 1, 1, 7);
  AttentionHeadParams& head = p.blocks[0].heads[0];
  head.value.value = identity(4);
  // Feature 2 carries a large key, every query is positive: all rows pick it.
  const Tensor r = Tensor::matrix({{1, 0, 0, 0}, {2, 0, 0, 0}, {100, 1, 2, 3}});
  head.query.value = Tensor::matrix({{1, 0, 0, 0}});
  head.key.value = Tensor::matrix({{10, 0, 0, 0}});
  Tape tape;
  Var rv = tape.constant(r);
  Var xi = attention_weights(rv, head, 1);
  const Tensor out = head_output(rv, xi, head).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(out(i, t), r(2, t), 1e-12);
}

TEST(StackedAttention, ZeroWeightsLeaveDoubleLayerNorm) {
  StackedAttentionParams p = make_params(4, 5, 2, 3, 8);
  zero_all(p);
  std::mt19937_64 rng(8);
  const Tensor r = random_tensor({4, 5}, rng, 2.0);
  Tape tape;
  const Tensor h = stacked_attention_forward(tape.constant(r), p).h.value();
  const Tensor ref = reference_layer_norm(reference_layer_norm(r));
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], ref[i], 1e-12);
}

TEST(StackedAttention, OutputShapeForShorterJourneys) {
  StackedAttentionParams p = make_params(3, 8, 2, 3, 9);
  std::mt19937_64 rng(9);
  for (std::size_t T = 1; T <= 8; ++T) {
    Tape tape;
    StackedAttentionOutput out = stacked_attention_forward(tape.constant(random_tensor({3, T}, rng)), p);
    EXPECT_EQ(out.h.shape(), (Shape{3, T}));
    EXPECT_TRUE(all_finite(out.h.value()));
    ASSERT_EQ(out.xi.size(), 2u);
    EXPECT_EQ(out.xi[0].shape(), (Shape{3, 3}));
  }
  Tape tape;
  EXPECT_THROW(stacked_attention_forward(tape.constant(Tensor({3, 9})), p), DimensionError);
  EXPECT_THROW(stacked_attention_forward(tape.constant(Tensor({2, 4})), p), DimensionError);
}

TEST(StackedAttention, HeadsAreEquivariantToFeaturePermutation) {
  StackedAttentionParams p = make_params(5, 4, 2, 3, 10);
  std::mt19937_64 rng(10);
  const Tensor r = random_tensor({5, 4}, rng);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  Tensor rp({5, 4});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t t = 0; t < 4; ++t) rp(i, t) = r(perm[i], t);
  for (AttentionHeadParams& head : p.blocks[0].heads) {
    Tape tape;
    Var a = tape.constant(r), b = tape.constant(rp);
    Var xa = attention_weights(a, head, 3), xb = attention_weights(b, head, 3);
    const Tensor ha = head_output(a, xa, head).value(), hb = head_output(b, xb, head).value();
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(hb(i, t), ha(perm[i], t), 1e-12);
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(xb.value()(i, j), xa.value()(perm[i], perm[j]), 1e-12);
    }
  }
}

TEST(StackedAttention, KeyMaskZeroesUnobservedColumns) {
  StackedAttentionParams p = make_params(4, 3, 1, 2, 12);
  std::mt19937_64 rng(12);
  const std::vector<bool> observed{true, false, true, false};
  Tape tape;
  const Tensor xi = attention_weights(tape.constant(random_tensor({4, 3}, rng)), p.blocks[0].heads[0], 2, &observed)
                        .value();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(xi(i, 1), 0.0);
    EXPECT_EQ(xi(i, 3), 0.0);
    EXPECT_NEAR(xi(i, 0) + xi(i, 2), 1.0, 1e-12);
  }
}

TEST(StackedAttention, ParameterGradientsMatchFiniteDifferences) {
  StackedAttentionParams p = make_params(3, 4, 2, 2, 13);
  std::mt19937_64 rng(13);
  const Tensor r = random_tensor({3, 4}, rng);
  auto walk = [&p](const ParameterVisitor& v) { p.visit("stacked", v); };
  const auto plain = check_module_gradients(walk, [&](Tape& tape) {
    return ad::sum(stacked_attention_forward(tape.constant(r), p).h);
  });
  EXPECT_LT(plain.max_rel_error, 1e-4) << plain.worst;
  const auto weighted = check_module_gradients(walk, [&](Tape& tape) {
    return probe(stacked_attention_forward(tape.constant(r), p).h);
  });
  EXPECT_LT(weighted.max_rel_error, 1e-4) << weighted.worst;
}

TEST(StackedAttention, ShortJourneyGradientsOnlyTouchLeadingBlocks) {
  StackedAttentionParams p = make_params(3, 6, 1, 2, 14);
  std::mt19937_64 rng(14);
  const Tensor r = random_tensor({3, 4}, rng);
  auto walk = [&p](const ParameterVisitor& v) { p.visit("stacked", v); };
  const auto result = check_module_gradients(walk, [&](Tape& tape) {
    return probe(stacked_attention_forward(tape.constant(r), p).h);
  });
  EXPECT_LT(result.max_rel_error, 1e-4) << result.worst;
  const Tensor& gv = p.blocks[0].heads[0].value.grad;
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b)
      if (a >= 4 || b >= 4) EXPECT_EQ(gv(a, b), 0.0);
}

TEST(StackedAttention, DepthKnobStacksBlocks) {
  StackedAttentionDims d;
  d.features = 3;
  d.max_visits = 4;
  d.key_dim = 2;
  d.ffn_dim = 5;
  d.depth = 2;
  StackedAttentionParams p = StackedAttentionParams::create(d);
  Rng rng(15);
  p.initialize(rng);
  EXPECT_EQ(p.blocks.size(), 2u);
  std::mt19937_64 data(15);
  const Tensor r = random_tensor({3, 4}, data);
  const auto result = check_module_gradients([&p](const ParameterVisitor& v) { p.visit("s", v); },
                                             [&](Tape& tape) { return probe(stacked_attention_forward(tape.constant(r), p).h); });
  EXPECT_LT(result.max_rel_error, 1e-4) << result.worst;
}
