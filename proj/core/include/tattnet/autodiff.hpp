#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "tattnet/tensor.hpp"

namespace tattnet {

/// A learnable tensor and its accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(Shape shape) : value(shape), grad(std::move(shape)) {}

  void zero_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a node's backward function sees while the tape is being unwound.
class BackwardPass {
 public:
  const Tensor& grad_output() const { return *grad_out_; }
  const Tensor& output() const;
  const Tensor& input(std::size_t k) const;
  bool needs_grad(std::size_t k) const;
  /// Adjoint of the k-th input; zero-initialized on first access.
  Tensor& input_grad(std::size_t k);

 private:
  friend class Tape;
  BackwardPass(Tape& tape, std::size_t node, std::vector<Tensor>& adjoints, const Tensor& grad_out)
      : tape_(tape), node_(node), adjoints_(adjoints), grad_out_(&grad_out) {}

  Tape& tape_;
  std::size_t node_;
  std::vector<Tensor>& adjoints_;
  const Tensor* grad_out_;
};

using BackwardFn = std::function<void(BackwardPass&)>;

/// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so the
/// reverse of insertion order is a valid topological order for backward().
///
/// A tape belongs to one forward/backward pass and one thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Differentiable input; read its gradient with grad().
  Var leaf(Tensor value);
  /// Binds a Parameter: backward() adds into parameter.grad.
  Var param(Parameter& parameter);

  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }

  /// Propagates d(loss)/d(.) to every leaf and bound parameter. Gradients
  /// accumulate across calls until zero_grad().
  void backward(Var loss);

  const Tensor& grad(Var leaf) const;
  void zero_grad();

  std::size_t size() const noexcept { return nodes_.size(); }
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

 private:
  friend class Var;
  friend class BackwardPass;

  enum class Kind { kConstant, kLeaf, kParam, kOp };
  struct Node {
    Tensor value;
    Tensor grad;
    Kind kind = Kind::kConstant;
    bool requires_grad = false;
    Parameter* parameter = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Var push(Node node);

  // deque keeps references returned by Var::value() stable while recording.
  std::deque<Node> nodes_;
};

namespace ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise (Hadamard) product.
Var mul(Var a, Var b);
Var scale(Var x, double factor);
/// x[R x C] + b[R] broadcast along columns.
Var add_col_broadcast(Var x, Var b);
/// x[R x C] + b[C] broadcast along rows.
Var add_row_broadcast(Var x, Var b);
Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var transpose(Var x);
/// Half-open range [begin, end) along one axis.
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);
Var sum(Var x);
/// Removes `axis`; a reduction to rank 0 yields shape {1}.
Var sum_axis(Var x, std::size_t axis);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
/// Natural log of max(x, floor); the gradient is zero where the floor is active.
Var log(Var x, double floor = 0.0);
/// Flat element `index` of x as a scalar.
Var pick(Var x, std::size_t index);

enum class EmptySlice {
  kError,  ///< an all-masked slice throws DegenerateSliceError
  kZero,   ///< an all-masked slice yields all-zero weights
};

/// Max-subtracted softmax along `axis`. kMaskedLogit entries map to exactly 0.
Var softmax(Var x, std::size_t axis, EmptySlice empty = EmptySlice::kError);

/// Normalizes each column of x[R x C] over its R entries, then applies the
/// per-row affine map gamma[R], beta[R].
Var layer_norm_columns(Var x, Var gamma, Var beta, double eps = 1e-5);

/// Selects columns of x[R x C] by index; index -1 produces a zero column.
Var gather_columns(Var x, std::vector<long> index);

/// Per-row 1D convolution: out[r, i] = sum_c x[r, i*stride + c] * w[r, c] + b[r].
Var depthwise_conv1d(Var x, Var w, Var b, std::size_t stride);

/// (source, target) index pair into the visit axis.
using VisitPair = std::array<std::size_t, 2>;

/// out[r, p] = a[r, pairs[p][0]] + b[r, pairs[p][1]] for a, b of shape [R x T].
Var pair_gather(Var a, Var b, const std::vector<VisitPair>& pairs);

/// [R x P] -> [R x T x T]: out[r, pairs[p][0], pairs[p][1]] = x[r, p], every
/// other entry is `fill` and receives no gradient. Pairs must be distinct.
Var scatter_pairs(Var x, const std::vector<VisitPair>& pairs, std::size_t visits, double fill);

/// out[r, j] = sum_i weights[r, i, j] * values[r, i].
Var contract_sources(Var weights, Var values);

}  // namespace ad

}  // namespace tattnet
