#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "aslkv/tensor.hpp"

// Serial reference implementations, kept for testing and benchmarking.
// Everything here recomputes from first principles with plain loops and
// never calls into the parallel kernels or the streaming pipeline, so it
// can serve as an independent check of both.
namespace aslkv::reference {

Matrix matmul(const Matrix& a, const Matrix& b);
Tensor3 causal_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v);
Tensor3 window_attention_probs(const Tensor3& q, const Tensor3& k, int window);
Matrix avg_pool_rows(const Matrix& u, int kernel);

std::vector<double> avg_pool_1d(std::span<const double> u, int kernel);

// Descending ranks: rank 0 for the largest score, ties broken by smaller index.
std::vector<int> rank_desc(std::span<const double> scores);

// Standard multi-head attention (one KV head per query head); used to check
// the grouped path when H_q == H_k.
Tensor3 multihead_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v);

// One-shot recomputation of a layer's head-reduced pooled scores from raw
// Q/K: windowed causal softmax, past-only histogram, box filter, group sum,
// then a float32 round (the precision scores carry outside the engine).
std::vector<float> reduced_scores(const Tensor3& q, const Tensor3& k, int window,
                                  int kernel);

// Offline recomputation of the selection decision over per-layer reduced
// scores: ranks from the recording start, per-token two-pass rank variance
// over the top union, relative variance against the first evaluation layer,
// first threshold crossing, final-layer fallback.
struct OfflineDecision {
    int selection_layer = -1;
    bool fallback = false;
    std::vector<int> selected;                        // token positions, ascending
    std::vector<std::pair<int, double>> ratios;       // (layer, relative variance)
    std::vector<std::vector<int>> ranks;              // per recorded layer, indexed by layer
};
OfflineDecision offline_replay(const std::vector<std::vector<float>>& scores,
                               double tau, int l_min, int l_obs, int kv_budget,
                               int window);

}  // namespace aslkv::reference
