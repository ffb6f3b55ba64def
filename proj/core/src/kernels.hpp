#pragma once

#include <cstddef>

namespace tattnet::kernels {

// Row-major accumulate-GEMM variants used by matmul and its backward pass.
// All of them compute C += op(A) * op(B) with C of extent m x n.

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);

}  // namespace tattnet::kernels
