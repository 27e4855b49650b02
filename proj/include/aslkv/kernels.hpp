#pragma once

#include <span>
#include <vector>

#include "aslkv/tensor.hpp"

// OpenMP-parallel compute kernels. Every loop parallelizes over independent
// output elements and keeps per-element reductions serial, so results are
// bit-identical for any thread count. Serial twins live in reference.hpp.
namespace aslkv::kernels {

// c[n x m] = a[n x k] * b[k x m]
Matrix matmul(const Matrix& a, const Matrix& b);

// Full causal self-attention with grouped KV heads.
// q: [H_q x n x d], k/v: [H_k x n x d]; query head h reads KV head h / (H_q/H_k).
// out: [H_q x n x d]. Softmax subtracts the row max before exponentiation.
Tensor3 causal_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v);

// Softmax probabilities of the trailing `window` queries against all n keys,
// causal on the last block: window row t may attend to positions <= n-window+t.
// q: [H_q x n x d] (only the last `window` rows are read), k: [H_k x n x d].
// out: [H_q x window x n]; masked entries are exactly 0.
Tensor3 window_attention_probs(const Tensor3& q, const Tensor3& k, int window);

// Row-wise 1D box filter: zero padding of kernel/2 on both sides, stride 1,
// divisor always `kernel` (padding counts toward the divisor).
Matrix avg_pool_rows(const Matrix& u, int kernel);

}  // namespace aslkv::kernels
