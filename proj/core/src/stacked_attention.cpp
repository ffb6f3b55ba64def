#include "tattnet/stacked_attention.hpp"

#include <cmath>
#include <string>

#include "binding.hpp"
#include "tattnet/errors.hpp"

namespace tattnet {

StackedAttentionParams StackedAttentionParams::create(const StackedAttentionDims& dims) {
  if (dims.features == 0 || dims.max_visits == 0 || dims.heads == 0 || dims.key_dim == 0 || dims.ffn_dim == 0 ||
      dims.depth == 0) {
    throw ContractError("stacked attention dimensions must all be >= 1");
  }
  const std::size_t N = dims.features, T = dims.max_visits;
  StackedAttentionParams params;
  params.dims = dims;
  params.blocks.resize(dims.depth);
  for (StackedBlockParams& block : params.blocks) {
    block.heads.resize(dims.heads);
    for (AttentionHeadParams& head : block.heads) {
      head.query = Parameter({dims.key_dim, T});
      head.key = Parameter({dims.key_dim, T});
      head.value = Parameter({T, T});
    }
    block.output = Parameter({N, dims.heads * N});
    block.ffn_in_weight = Parameter({dims.ffn_dim, T});
    block.ffn_in_bias = Parameter({dims.ffn_dim});
    block.ffn_out_weight = Parameter({T, dims.ffn_dim});
    block.ffn_out_bias = Parameter({T});
    block.norm1_scale = Parameter({N});
    block.norm1_shift = Parameter({N});
    block.norm2_scale = Parameter({N});
    block.norm2_shift = Parameter({N});
  }
  return params;
}

void StackedAttentionParams::initialize(Rng& rng) {
  for (StackedBlockParams& block : blocks) {
    for (AttentionHeadParams& head : block.heads) {
      glorot_uniform(head.query, rng);
      glorot_uniform(head.key, rng);
      glorot_uniform(head.value, rng);
    }
    glorot_uniform(block.output, rng);
    glorot_uniform(block.ffn_in_weight, rng);
    constant_init(block.ffn_in_bias, 0.0);
    glorot_uniform(block.ffn_out_weight, rng);
    constant_init(block.ffn_out_bias, 0.0);
    constant_init(block.norm1_scale, 1.0);
    constant_init(block.norm1_shift, 0.0);
    constant_init(block.norm2_scale, 1.0);
    constant_init(block.norm2_shift, 0.0);
  }
}

void StackedAttentionParams::visit(const std::string& prefix, const ParameterVisitor& visitor) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    StackedBlockParams& block = blocks[b];
    const std::string bp = prefix + "." + std::to_string(b) + ".";
    for (std::size_t m = 0; m < block.heads.size(); ++m) {
      const std::string hp = bp + "head" + std::to_string(m) + ".";
      visitor(hp + "query", block.heads[m].query);
      visitor(hp + "key", block.heads[m].key);
      visitor(hp + "value", block.heads[m].value);
    }
    visitor(bp + "output", block.output);
    visitor(bp + "ffn_in_weight", block.ffn_in_weight);
    visitor(bp + "ffn_in_bias", block.ffn_in_bias);
    visitor(bp + "ffn_out_weight", block.ffn_out_weight);
    visitor(bp + "ffn_out_bias", block.ffn_out_bias);
    visitor(bp + "norm1_scale", block.norm1_scale);
    visitor(bp + "norm1_shift", block.norm1_shift);
    visitor(bp + "norm2_scale", block.norm2_scale);
    visitor(bp + "norm2_shift", block.norm2_shift);
  }
}

Var attention_weights(Var r, AttentionHeadParams& head, std::size_t key_dim, const std::vector<bool>* key_observed) {
  Tape& tape = r.tape();
  const std::size_t N = r.dim(0), T = r.dim(1);
  Var wq = detail::bind_leading(tape, head.query, key_dim, T);
  Var wk = detail::bind_leading(tape, head.key, key_dim, T);
  Var rt = ad::transpose(r);
  Var queries = ad::matmul(wq, rt);  // d_K x N, column i is Q for feature i
  Var keys = ad::matmul(wk, rt);     // d_K x N
  Var logits = ad::scale(ad::matmul(ad::transpose(queries), keys), 1.0 / std::sqrt(static_cast<double>(key_dim)));
  if (key_observed) {
    if (key_observed->size() != N) throw DimensionError("key mask length does not match feature count");
    Tensor mask({N, N});
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) mask(i, j) = (*key_observed)[j] ? 0.0 : kMaskedLogit;
    logits = ad::add(logits, tape.constant(std::move(mask)));
  }
  return ad::softmax(logits, 1);
}

Var head_output(Var r, Var xi, AttentionHeadParams& head) {
  const std::size_t T = r.dim(1);
  Var wv = detail::bind_leading(r.tape(), head.value, T, T);
  Var value_rows = ad::matmul(r, ad::transpose(wv));  // row j is (W_V r_j^T)^T
  return ad::matmul(xi, value_rows);
}

Var multi_head_attention(Var r, StackedBlockParams& block, std::size_t key_dim, std::vector<Var>* xi_out,
                         const std::vector<bool>* key_observed) {
  std::vector<Var> heads;
  heads.reserve(block.heads.size());
  for (AttentionHeadParams& head : block.heads) {
    Var xi = attention_weights(r, head, key_dim, key_observed);
    if (xi_out) xi_out->push_back(xi);
    heads.push_back(head_output(r, xi, head));
  }
  Var stacked = heads.size() == 1 ? heads[0] : ad::concat(heads, 0);
  return ad::matmul(r.tape().param(block.output), stacked);
}

StackedAttentionOutput stacked_attention_forward(Var r, StackedAttentionParams& params,
                                                 const std::vector<bool>* key_observed) {
  const StackedAttentionDims& dims = params.dims;
  if (r.shape().size() != 2 || r.dim(0) != dims.features || r.dim(1) > dims.max_visits || r.dim(1) == 0) {
    throw DimensionError("stacked attention input " + shape_string(r.shape()) + " incompatible with N=" +
                         std::to_string(dims.features) + ", T_max=" + std::to_string(dims.max_visits));
  }
  Tape& tape = r.tape();
  const std::size_t T = r.dim(1);
  StackedAttentionOutput out;
  Var x = r;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    StackedBlockParams& block = params.blocks[b];
    Var mha = multi_head_attention(x, block, dims.key_dim, b == 0 ? &out.xi : nullptr,
                                   b == 0 ? key_observed : nullptr);
    Var x1 = ad::layer_norm_columns(ad::add(x, mha), tape.param(block.norm1_scale), tape.param(block.norm1_shift));

    Var w1 = detail::bind_leading(tape, block.ffn_in_weight, dims.ffn_dim, T);
    Var w2 = detail::bind_leading(tape, block.ffn_out_weight, T, dims.ffn_dim);
    Var b2 = detail::bind_leading(tape, block.ffn_out_bias, T);
    Var hidden = ad::relu(ad::add_row_broadcast(ad::matmul(x1, ad::transpose(w1)), tape.param(block.ffn_in_bias)));
    Var ffn = ad::add_row_broadcast(ad::matmul(hidden, ad::transpose(w2)), b2);
    x = ad::layer_norm_columns(ad::add(x1, ffn), tape.param(block.norm2_scale), tape.param(block.norm2_shift));
  }
  out.h = x;
  return out;
}

}  // namespace tattnet
