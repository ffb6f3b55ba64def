#pragma once

#include "tattnet/autodiff.hpp"

namespace tattnet::detail {

/// Binds `p` on `tape` and narrows it to its leading rows x cols block.
/// Parameters shaped by the maximum journey length are evaluated this way for
/// shorter journeys.
inline Var bind_leading(Tape& tape, Parameter& p, std::size_t rows, std::size_t cols) {
  Var v = tape.param(p);
  if (v.dim(0) != rows) v = ad::slice(v, 0, 0, rows);
  if (v.dim(1) != cols) v = ad::slice(v, 1, 0, cols);
  return v;
}

inline Var bind_leading(Tape& tape, Parameter& p, std::size_t length) {
  Var v = tape.param(p);
  if (v.dim(0) != length) v = ad::slice(v, 0, 0, length);
  return v;
}

}  // namespace tattnet::detail
