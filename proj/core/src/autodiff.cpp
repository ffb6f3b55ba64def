#include "tattnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kernels.hpp"
#include "tattnet/errors.hpp"

namespace tattnet {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("value() on an unbound Var");
  return tape_->nodes_[id_].value;
}

const Tensor& BackwardPass::output() const { return tape_.nodes_[node_].value; }

const Tensor& BackwardPass::input(std::size_t k) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs[k]].value;
}

bool BackwardPass::needs_grad(std::size_t k) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs[k]].requires_grad;
}

Tensor& BackwardPass::input_grad(std::size_t k) {
  const std::size_t id = tape_.nodes_[node_].inputs[k];
  Tensor& adj = adjoints_[id];
  if (adj.rank() == 0) adj = Tensor(tape_.nodes_[id].value.shape());
  return adj;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.grad = Tensor(value.shape());
  n.value = std::move(value);
  n.kind = Kind::kLeaf;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(Parameter& parameter) {
  if (parameter.grad.shape() != parameter.value.shape()) parameter.grad = Tensor(parameter.value.shape());
  Node n;
  n.value = parameter.value;
  n.kind = Kind::kParam;
  n.requires_grad = true;
  n.parameter = &parameter;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.kind = Kind::kOp;
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw ContractError("Var recorded on a different tape");
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  const Node& root = nodes_.at(loss.id());
  if (root.value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_string(root.value.shape()));
  }
  if (!std::isfinite(root.value[0])) throw ContractError("backward() on a non-finite loss");

  // Fresh adjoints per call; leaves receive whole contributions so that a
  // repeated call adds exactly the same tensor again.
  std::vector<Tensor> adjoints(nodes_.size());
  adjoints[loss.id()] = Tensor::ones(root.value.shape());
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    Tensor& adj = adjoints[id];
    if (adj.rank() == 0 || !node.requires_grad) continue;
    switch (node.kind) {
      case Kind::kOp: {
        BackwardPass pass(*this, id, adjoints, adj);
        node.backward(pass);
        break;
      }
      case Kind::kLeaf:
        node.grad += adj;
        break;
      case Kind::kParam:
        node.parameter->grad += adj;
        break;
      case Kind::kConstant:
        break;
    }
    adj = Tensor();
  }
}

const Tensor& Tape::grad(Var leaf) const {
  const Node& n = nodes_.at(leaf.id());
  if (n.kind != Kind::kLeaf) throw ContractError("grad() is only tracked for leaf Vars");
  return n.grad;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) {
    if (n.kind == Kind::kLeaf) n.grad.fill(0.0);
    if (n.kind == Kind::kParam) n.parameter->zero_grad();
  }
}

namespace ad {
namespace {

struct AxisGeometry {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisGeometry geometry(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisGeometry g;
  for (std::size_t i = 0; i < axis; ++i) g.outer *= shape[i];
  g.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) g.inner *= shape[i];
  return g;
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + " needs a matrix, got " + shape_string(t.shape()));
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = tattnet::matmul(av, bv);
  return a.tape().record(std::move(out), {a, b}, [](BackwardPass& p) {
    const Tensor& A = p.input(0);
    const Tensor& B = p.input(1);
    const Tensor& G = p.grad_output();
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    if (p.needs_grad(0)) kernels::gemm_nt(m, k, n, G.data().data(), B.data().data(), p.input_grad(0).data().data());
    if (p.needs_grad(1)) kernels::gemm_tn(k, n, m, A.data().data(), G.data().data(), p.input_grad(1).data().data());
  });
}

Var add(Var a, Var b) {
  require_same(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  return a.tape().record(std::move(out), {a, b}, [](BackwardPass& p) {
    for (std::size_t k = 0; k < 2; ++k)
      if (p.needs_grad(k)) p.input_grad(k) += p.grad_output();
  });
}

Var sub(Var a, Var b) {
  require_same(a.value(), b.value(), "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return a.tape().record(std::move(out), {a, b}, [](BackwardPass& p) {
    const Tensor& g = p.grad_output();
    if (p.needs_grad(0)) p.input_grad(0) += g;
    if (p.needs_grad(1)) {
      Tensor& gb = p.input_grad(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same(a.value(), b.value(), "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [](BackwardPass& p) {
    const Tensor& g = p.grad_output();
    if (p.needs_grad(0)) {
      Tensor& ga = p.input_grad(0);
      const Tensor& bv = p.input(1);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (p.needs_grad(1)) {
      Tensor& gb = p.input_grad(1);
      const Tensor& av = p.input(0);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out = map(x.value(), [factor](double v) { return v * factor; });
  return x.tape().record(std::move(out), {x}, [factor](BackwardPass& p) {
    const Tensor& g = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
  });
}

Var add_col_broadcast(Var x, Var b) {
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  require_rank2(xv, "add_col_broadcast");
  if (bv.size() != xv.rows()) {
    throw DimensionError("add_col_broadcast: bias " + shape_string(bv.shape()) + " vs " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t R = xv.rows(), C = xv.cols();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out(r, c) += bv[r];
  return x.tape().record(std::move(out), {x, b}, [R, C](BackwardPass& p) {
    const Tensor& g = p.grad_output();
    if (p.needs_grad(0)) p.input_grad(0) += g;
    if (p.needs_grad(1)) {
      Tensor& gb = p.input_grad(1);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) gb[r] += g(r, c);
    }
  });
}

Var add_row_broadcast(Var x, Var b) {
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  require_rank2(xv, "add_row_broadcast");
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_row_broadcast: bias " + shape_string(bv.shape()) + " vs " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t R = xv.rows(), C = xv.cols();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out(r, c) += bv[c];
  return x.tape().record(std::move(out), {x, b}, [R, C](BackwardPass& p) {
    const Tensor& g = p.grad_output();
    if (p.needs_grad(0)) p.input_grad(0) += g;
    if (p.needs_grad(1)) {
      Tensor& gb = p.input_grad(1);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) gb[c] += g(r, c);
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  Shape out_shape = first;
  out_shape.at(axis) = 0;
  for (const Var& v : parts) {
    const Shape& s = v.shape();
    bool compatible = s.size() == first.size();
    for (std::size_t d = 0; compatible && d < s.size(); ++d) compatible = d == axis || s[d] == first[d];
    if (!compatible) {
      throw DimensionError("concat shape mismatch: " + shape_string(first) + " vs " + shape_string(s));
    }
    out_shape[axis] += s[axis];
  }
  Tensor out(out_shape);
  const AxisGeometry og = geometry(out_shape, axis);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& v : parts) {
    const Tensor& t = v.value();
    const AxisGeometry g = geometry(t.shape(), axis);
    for (std::size_t o = 0; o < g.outer; ++o)
      for (std::size_t a = 0; a < g.length; ++a)
        for (std::size_t i = 0; i < g.inner; ++i)
          out[(o * og.length + offset + a) * og.inner + i] = t[(o * g.length + a) * g.inner + i];
    offsets.push_back(offset);
    offset += g.length;
  }
  return parts[0].tape().record(std::move(out), parts, [axis, offsets, og](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (!p.needs_grad(k)) continue;
      Tensor& gk = p.input_grad(k);
      const AxisGeometry g = geometry(gk.shape(), axis);
      for (std::size_t o = 0; o < g.outer; ++o)
        for (std::size_t a = 0; a < g.length; ++a)
          for (std::size_t i = 0; i < g.inner; ++i)
            gk[(o * g.length + a) * g.inner + i] += go[(o * og.length + offsets[k] + a) * og.inner + i];
    }
  });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var transpose(Var x) {
  return x.tape().record(x.value().transposed(), {x}, [](BackwardPass& p) {
    p.input_grad(0) += p.grad_output().transposed();
  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  const AxisGeometry g = geometry(xv.shape(), axis);
  if (begin > end || end > g.length) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range on axis " +
                         std::to_string(axis) + " of " + shape_string(xv.shape()));
  }
  Shape out_shape = xv.shape();
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t len = end - begin;
  for (std::size_t o = 0; o < g.outer; ++o)
    for (std::size_t a = 0; a < len; ++a)
      for (std::size_t i = 0; i < g.inner; ++i)
        out[(o * len + a) * g.inner + i] = xv[(o * g.length + begin + a) * g.inner + i];
  return x.tape().record(std::move(out), {x}, [g, begin, len](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t o = 0; o < g.outer; ++o)
      for (std::size_t a = 0; a < len; ++a)
        for (std::size_t i = 0; i < g.inner; ++i)
          gx[(o * g.length + begin + a) * g.inner + i] += go[(o * len + a) * g.inner + i];
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [](BackwardPass& p) {
    Tensor& gx = p.input_grad(0);
    const Tensor& go = p.grad_output();
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [](BackwardPass& p) {
    const double g = p.grad_output()[0];
    Tensor& gx = p.input_grad(0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var sum_axis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const AxisGeometry g = geometry(xv.shape(), axis);
  Shape out_shape = xv.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape = {1};
  Tensor out(out_shape);
  for (std::size_t o = 0; o < g.outer; ++o)
    for (std::size_t a = 0; a < g.length; ++a)
      for (std::size_t i = 0; i < g.inner; ++i) out[o * g.inner + i] += xv[(o * g.length + a) * g.inner + i];
  return x.tape().record(std::move(out), {x}, [g](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t o = 0; o < g.outer; ++o)
      for (std::size_t a = 0; a < g.length; ++a)
        for (std::size_t i = 0; i < g.inner; ++i) gx[(o * g.length + a) * g.inner + i] += go[o * g.inner + i];
  });
}

Var relu(Var x) {
  Tensor out = map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  return x.tape().record(std::move(out), {x}, [](BackwardPass& p) {
    const Tensor& xv = p.input(0);
    const Tensor& g = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

Var sigmoid(Var x) {
  Tensor out = map(x.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  return x.tape().record(std::move(out), {x}, [](BackwardPass& p) {
    const Tensor& y = p.output();
    const Tensor& g = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var x) {
  Tensor out = map(x.value(), [](double v) { return std::tanh(v); });
  return x.tape().record(std::move(out), {x}, [](BackwardPass& p) {
    const Tensor& y = p.output();
    const Tensor& g = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var log(Var x, double floor) {
  Tensor out = map(x.value(), [floor](double v) { return std::log(std::max(v, floor)); });
  return x.tape().record(std::move(out), {x}, [floor](BackwardPass& p) {
    const Tensor& xv = p.input(0);
    const Tensor& g = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > floor) gx[i] += g[i] / xv[i];
  });
}

Var pick(Var x, std::size_t index) {
  if (index >= x.value().size()) {
    throw DimensionError("pick index " + std::to_string(index) + " out of range for " + shape_string(x.shape()));
  }
  return x.tape().record(Tensor::scalar(x.value()[index]), {x}, [index](BackwardPass& p) {
    p.input_grad(0)[index] += p.grad_output()[0];
  });
}

Var softmax(Var x, std::size_t axis, EmptySlice empty) {
  const Tensor& xv = x.value();
  const AxisGeometry g = geometry(xv.shape(), axis);
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < g.outer; ++o) {
    for (std::size_t i = 0; i < g.inner; ++i) {
      const std::size_t base = o * g.length * g.inner + i;
      double mx = kMaskedLogit;
      bool has_nan = false;
      for (std::size_t a = 0; a < g.length; ++a) {
        const double v = xv[base + a * g.inner];
        has_nan = has_nan || std::isnan(v);
        mx = std::max(mx, v);
      }
      if (has_nan) {
        // Propagate so the caller sees a non-finite result instead of a mask error.
        for (std::size_t a = 0; a < g.length; ++a) out[base + a * g.inner] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (mx == kMaskedLogit) {
        if (empty == EmptySlice::kError) {
          throw DegenerateSliceError("softmax slice along axis " + std::to_string(axis) + " of " +
                                     shape_string(xv.shape()) + " has no unmasked entry");
        }
        continue;  // leaves zeros
      }
      double total = 0.0;
      for (std::size_t a = 0; a < g.length; ++a) {
        const double v = xv[base + a * g.inner];
        const double e = v == kMaskedLogit ? 0.0 : std::exp(v - mx);
        out[base + a * g.inner] = e;
        total += e;
      }
      for (std::size_t a = 0; a < g.length; ++a) out[base + a * g.inner] /= total;
    }
  }
  return x.tape().record(std::move(out), {x}, [g](BackwardPass& p) {
    const Tensor& y = p.output();
    const Tensor& go = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t o = 0; o < g.outer; ++o) {
      for (std::size_t i = 0; i < g.inner; ++i) {
        const std::size_t base = o * g.length * g.inner + i;
        double dot = 0.0;
        for (std::size_t a = 0; a < g.length; ++a) dot += y[base + a * g.inner] * go[base + a * g.inner];
        for (std::size_t a = 0; a < g.length; ++a) {
          const std::size_t k = base + a * g.inner;
          gx[k] += y[k] * (go[k] - dot);
        }
      }
    }
  });
}

Var layer_norm_columns(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  require_rank2(xv, "layer_norm_columns");
  const std::size_t R = xv.rows(), C = xv.cols();
  if (gamma.value().size() != R || beta.value().size() != R) {
    throw DimensionError("layer_norm_columns: affine params " + shape_string(gamma.shape()) + ", " +
                         shape_string(beta.shape()) + " vs input " + shape_string(xv.shape()));
  }
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor normalized(xv.shape());
  std::vector<double> inv_std(C);
  Tensor out(xv.shape());
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) mean += xv(r, c);
    mean /= static_cast<double>(R);
    double var = 0.0;
    for (std::size_t r = 0; r < R; ++r) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= static_cast<double>(R);
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t r = 0; r < R; ++r) {
      normalized(r, c) = (xv(r, c) - mean) * inv_std[c];
      out(r, c) = gv[r] * normalized(r, c) + bv[r];
    }
  }
  return x.tape().record(std::move(out), {x, gamma, beta},
                         [normalized = std::move(normalized), inv_std = std::move(inv_std), R, C](BackwardPass& p) {
                           const Tensor& go = p.grad_output();
                           const Tensor& gv = p.input(1);
                           if (p.needs_grad(0)) {
                             Tensor& gx = p.input_grad(0);
                             const double n = static_cast<double>(R);
                             for (std::size_t c = 0; c < C; ++c) {
                               double sum_d = 0.0, sum_dx = 0.0;
                               for (std::size_t r = 0; r < R; ++r) {
                                 const double d = go(r, c) * gv[r];
                                 sum_d += d;
                                 sum_dx += d * normalized(r, c);
                               }
                               for (std::size_t r = 0; r < R; ++r) {
                                 const double d = go(r, c) * gv[r];
                                 gx(r, c) += inv_std[c] * (d - sum_d / n - normalized(r, c) * sum_dx / n);
                               }
                             }
                           }
                           if (p.needs_grad(1)) {
                             Tensor& gg = p.input_grad(1);
                             for (std::size_t r = 0; r < R; ++r)
                               for (std::size_t c = 0; c < C; ++c) gg[r] += go(r, c) * normalized(r, c);
                           }
                           if (p.needs_grad(2)) {
                             Tensor& gb = p.input_grad(2);
                             for (std::size_t r = 0; r < R; ++r)
                               for (std::size_t c = 0; c < C; ++c) gb[r] += go(r, c);
                           }
                         });
}

Var gather_columns(Var x, std::vector<long> index) {
  const Tensor& xv = x.value();
  require_rank2(xv, "gather_columns");
  const std::size_t R = xv.rows(), C = xv.cols();
  for (long k : index) {
    if (k < -1 || k >= static_cast<long>(C)) {
      throw DimensionError("gather_columns index " + std::to_string(k) + " out of range for " +
                           shape_string(xv.shape()));
    }
  }
  const std::size_t W = index.size();
  Tensor out({R, W});
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t w = 0; w < W; ++w)
      if (index[w] >= 0) out(r, w) = xv(r, static_cast<std::size_t>(index[w]));
  return x.tape().record(std::move(out), {x}, [index = std::move(index), R, W](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t w = 0; w < W; ++w)
        if (index[w] >= 0) gx(r, static_cast<std::size_t>(index[w])) += go(r, w);
  });
}

Var depthwise_conv1d(Var x, Var w, Var b, std::size_t stride) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  require_rank2(xv, "depthwise_conv1d");
  require_rank2(wv, "depthwise_conv1d");
  const std::size_t R = xv.rows(), L = xv.cols(), K = wv.cols();
  if (wv.rows() != R || bv.size() != R || stride == 0 || K == 0 || L < K) {
    throw DimensionError("depthwise_conv1d: input " + shape_string(xv.shape()) + ", kernels " +
                         shape_string(wv.shape()) + ", bias " + shape_string(bv.shape()));
  }
  const std::size_t out_len = (L - K) / stride + 1;
  Tensor out({R, out_len});
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t i = 0; i < out_len; ++i) {
      double s = bv[r];
      for (std::size_t c = 0; c < K; ++c) s += xv(r, i * stride + c) * wv(r, c);
      out(r, i) = s;
    }
  }
  return x.tape().record(std::move(out), {x, w, b}, [R, K, out_len, stride](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    const Tensor& xv = p.input(0);
    const Tensor& wv = p.input(1);
    if (p.needs_grad(0)) {
      Tensor& gx = p.input_grad(0);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t i = 0; i < out_len; ++i)
          for (std::size_t c = 0; c < K; ++c) gx(r, i * stride + c) += go(r, i) * wv(r, c);
    }
    if (p.needs_grad(1)) {
      Tensor& gw = p.input_grad(1);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t i = 0; i < out_len; ++i)
          for (std::size_t c = 0; c < K; ++c) gw(r, c) += go(r, i) * xv(r, i * stride + c);
    }
    if (p.needs_grad(2)) {
      Tensor& gb = p.input_grad(2);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t i = 0; i < out_len; ++i) gb[r] += go(r, i);
    }
  });
}

Var pair_gather(Var a, Var b, const std::vector<VisitPair>& pairs) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "pair_gather");
  require_same(av, bv, "pair_gather");
  const std::size_t R = av.rows(), T = av.cols(), P = pairs.size();
  for (const VisitPair& q : pairs)
    if (q[0] >= T || q[1] >= T) throw DimensionError("pair_gather: visit index out of range");
  Tensor out({R, P});
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t k = 0; k < P; ++k) out(r, k) = av(r, pairs[k][0]) + bv(r, pairs[k][1]);
  return a.tape().record(std::move(out), {a, b}, [R, P, pairs](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    for (std::size_t side = 0; side < 2; ++side) {
      if (!p.needs_grad(side)) continue;
      Tensor& g = p.input_grad(side);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < P; ++k) g(r, pairs[k][side]) += go(r, k);
    }
  });
}

Var scatter_pairs(Var x, const std::vector<VisitPair>& pairs, std::size_t visits, double fill) {
  const Tensor& xv = x.value();
  require_rank2(xv, "scatter_pairs");
  const std::size_t R = xv.rows(), P = pairs.size(), T = visits;
  if (xv.cols() != P) throw DimensionError("scatter_pairs: " + shape_string(xv.shape()) + " for " + std::to_string(P) + " pairs");
  for (const VisitPair& q : pairs)
    if (q[0] >= T || q[1] >= T) throw DimensionError("scatter_pairs: visit index out of range");
  Tensor out({R, T, T}, fill);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t k = 0; k < P; ++k) out(r, pairs[k][0], pairs[k][1]) = xv(r, k);
  return x.tape().record(std::move(out), {x}, [R, P, pairs](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    Tensor& gx = p.input_grad(0);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t k = 0; k < P; ++k) gx(r, k) += go(r, pairs[k][0], pairs[k][1]);
  });
}

Var contract_sources(Var weights, Var values) {
  const Tensor& pv = weights.value();
  const Tensor& hv = values.value();
  require_rank2(hv, "contract_sources");
  const std::size_t R = hv.rows(), T = hv.cols();
  if (pv.shape() != Shape{R, T, T}) {
    throw DimensionError("contract_sources: weights " + shape_string(pv.shape()) + " vs values " +
                         shape_string(hv.shape()));
  }
  Tensor out({R, T});
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t i = 0; i < T; ++i) {
      const double h = hv(r, i);
      for (std::size_t j = 0; j < T; ++j) out(r, j) += pv(r, i, j) * h;
    }
  return weights.tape().record(std::move(out), {weights, values}, [R, T](BackwardPass& p) {
    const Tensor& go = p.grad_output();
    const Tensor& pv = p.input(0);
    const Tensor& hv = p.input(1);
    if (p.needs_grad(0)) {
      Tensor& gp = p.input_grad(0);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t i = 0; i < T; ++i)
          for (std::size_t j = 0; j < T; ++j) gp(r, i, j) += go(r, j) * hv(r, i);
    }
    if (p.needs_grad(1)) {
      Tensor& gh = p.input_grad(1);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t i = 0; i < T; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < T; ++j) s += go(r, j) * pv(r, i, j);
          gh(r, i) += s;
        }
    }
  });
}

}  // namespace ad
}  // namespace tattnet
