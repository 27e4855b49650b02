#pragma once

#include <deque>
#include <span>
#include <vector>

#include "aslkv/tensor.hpp"

namespace aslkv {

struct ScoringConfig {
    int window_size = 32;  // trailing observation tokens, always retained
    int kernel_size = 7;   // 1D pooling width, odd
    int kv_budget = 2048;  // retained entries per layer and KV head

    void validate() const;
};

// Head-reduced pooled attention mass per past token for one layer.
struct PooledScores {
    int layer_index = 0;
    Matrix per_head;                  // [H_k x (n-W)], used for per-head KV compression
    std::vector<double> reduced;      // [n-W], sum over groups and heads
    std::vector<float> reduced_f32;   // `reduced` rounded to the precision traces carry;
                                      // ranks are computed from this vector
};

// Descending ranks of one layer's reduced scores; rank 0 = highest score.
struct RankVector {
    int layer_index = 0;
    std::vector<int> ranks;  // permutation of 0..len-1
};

// Rolling store of the most recent rank vectors, keyed by consecutive layers.
class RankCache {
  public:
    explicit RankCache(int capacity);

    void push(RankVector rv);  // layer index must extend the stored run by one
    bool contains(int layer) const;
    // True when layers [last-depth+1, last] are all present and last == `layer`.
    bool has_window(int layer, int depth) const;
    const RankVector& at_layer(int layer) const;
    void clear();

    int size() const { return int(entries_.size()); }
    int capacity() const { return capacity_; }
    int first_layer() const;
    int last_layer() const;

  private:
    int capacity_;
    std::deque<RankVector> entries_;
};

// Per-KV-head compression result plus the scores that produced it.
// `retained` holds local row indices into the sequence the scores were
// computed over, sorted ascending.
struct CompressedKV {
    std::vector<std::vector<int>> retained;  // [H_k][count]
    std::vector<Matrix> keys;                // [H_k], rows parallel to retained
    std::vector<Matrix> values;
    PooledScores scores;
};

// Softmax of the trailing W queries against all n keys, causal on the last
// block. Returns [H_q x W x n]; each live row sums to 1.
Tensor3 window_attention(const Tensor3& q_window, const Tensor3& k_full);

// Column sums of the window rows over past positions only: [H_q x (n-W)].
Matrix past_histogram(const Tensor3& a, int window, int n);

// Box filter with zero padding on both sides; the divisor is always `kernel`.
std::vector<double> avg_pool_1d(std::span<const double> u, int kernel);

// Sum pooled per-query-head scores over each GQA group, then over all KV
// heads, yielding the per-head matrix and the reduced vector.
PooledScores group_sum(const Matrix& pooled_per_q_head, int group, int layer_index);

// Descending ranks with ties broken by smaller token index.
RankVector rank_desc(std::span<const double> scores, int layer_index = 0);

// Compression branch only: windowed scoring + per-head top-k + window concat.
// q: [H_q x n x d] (full sequence), k/v: [H_k x n x d].
CompressedKV compress_kv(int layer_index, const Tensor3& q, const Tensor3& k,
                         const Tensor3& v, const ScoringConfig& config);

// Compression plus rank recording: pushes this layer's rank vector (computed
// from the float32-rounded reduced scores) into the rank cache.
CompressedKV get_ranks(int layer_index, const Tensor3& q, const Tensor3& k,
                       const Tensor3& v, const ScoringConfig& config,
                       RankCache& rank_cache);

}  // namespace aslkv
