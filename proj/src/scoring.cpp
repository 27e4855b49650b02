#include "aslkv/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aslkv/kernels.hpp"
#include "aslkv/types.hpp"

namespace aslkv {

void ScoringConfig::validate() const {
    if (window_size < 1)
        throw ConfigError("scoring: window_size must be >= 1, got " +
                          std::to_string(window_size));
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("scoring: kernel_size must be odd and >= 1, got " +
                          std::to_string(kernel_size));
    if (kv_budget <= window_size)
        throw ConfigError("scoring: kv_budget " + std::to_string(kv_budget) +
                          " must exceed window_size " + std::to_string(window_size));
}

RankCache::RankCache(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("rank cache capacity must be >= 1");
}

void RankCache::push(RankVector rv) {
    if (!entries_.empty() && rv.layer_index != last_layer() + 1)
        throw StateError("rank cache: layer " + std::to_string(rv.layer_index) +
                         " does not extend run ending at " + std::to_string(last_layer()));
    entries_.push_back(std::move(rv));
    while (int(entries_.size()) > capacity_) entries_.pop_front();
}

bool RankCache::contains(int layer) const {
    return !entries_.empty() && layer >= first_layer() && layer <= last_layer();
}

bool RankCache::has_window(int layer, int depth) const {
    return !entries_.empty() && last_layer() == layer && layer - depth + 1 >= first_layer();
}

const RankVector& RankCache::at_layer(int layer) const {
    if (!contains(layer))
        throw StateError("rank cache: layer " + std::to_string(layer) + " not stored");
    return entries_[layer - first_layer()];
}

void RankCache::clear() { entries_.clear(); }

int RankCache::first_layer() const {
    if (entries_.empty()) throw StateError("rank cache is empty");
    return entries_.front().layer_index;
}

int RankCache::last_layer() const {
    if (entries_.empty()) throw StateError("rank cache is empty");
    return entries_.back().layer_index;
}

Tensor3 window_attention(const Tensor3& q_window, const Tensor3& k_full) {
    const int window = q_window.n1;
    const int n = k_full.n1;
    if (window > n)
        throw ArgumentError("window_attention: window " + std::to_string(window) +
                            " exceeds sequence length " + std::to_string(n));
    if (q_window.n2 != k_full.n2)
        throw ArgumentError("window_attention: head dim mismatch");
    return kernels::window_attention_probs(q_window, k_full, window);
}

Matrix past_histogram(const Tensor3& a, int window, int n) {
    if (n <= window)
        throw ArgumentError("past_histogram: need n > window, got n=" + std::to_string(n) +
                            " window=" + std::to_string(window));
    if (a.n1 != window || a.n2 != n)
        throw ArgumentError("past_histogram: attention shape mismatch");
    const int m = n - window;
    Matrix u(a.n0, m);
#pragma omp parallel for schedule(static)
    for (int h = 0; h < a.n0; ++h) {
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int t = 0; t < window; ++t) s += a.at(h, t, j);
            u.at(h, j) = s;
        }
    }
    return u;
}

std::vector<double> avg_pool_1d(std::span<const double> u, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw ArgumentError("avg_pool_1d: kernel must be odd and >= 1, got " +
                            std::to_string(kernel));
    if (u.empty()) throw ArgumentError("avg_pool_1d: empty input");
    Matrix tmp(1, int(u.size()));
    std::copy(u.begin(), u.end(), tmp.row(0));
    Matrix pooled = kernels::avg_pool_rows(tmp, kernel);
    return {pooled.row(0), pooled.row(0) + pooled.cols};
}

PooledScores group_sum(const Matrix& pooled_per_q_head, int group, int layer_index) {
    if (group < 1 || pooled_per_q_head.rows % group != 0)
        throw ArgumentError("group_sum: " + std::to_string(pooled_per_q_head.rows) +
                            " query heads not divisible into groups of " +
                            std::to_string(group));
    const int hk = pooled_per_q_head.rows / group;
    const int m = pooled_per_q_head.cols;
    PooledScores out;
    out.layer_index = layer_index;
    out.per_head = Matrix(hk, m);
    out.reduced.assign(m, 0.0);
    for (int g = 0; g < hk; ++g)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int e = 0; e < group; ++e) s += pooled_per_q_head.at(g * group + e, j);
            out.per_head.at(g, j) = s;
            out.reduced[j] += s;
        }
    out.reduced_f32.resize(m);
    for (int j = 0; j < m; ++j) out.reduced_f32[j] = float(out.reduced[j]);
    return out;
}

RankVector rank_desc(std::span<const double> scores, int layer_index) {
    for (double s : scores)
        if (std::isnan(s)) throw DataError("rank_desc: NaN in scores");
    const int m = int(scores.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    RankVector rv;
    rv.layer_index = layer_index;
    rv.ranks.resize(m);
    for (int r = 0; r < m; ++r) rv.ranks[order[r]] = r;
    return rv;
}

namespace {

// Top `count` local indices of one per-head score row, ties by smaller index,
// returned sorted ascending.
std::vector<int> top_indices(const Matrix& per_head, int head, int count) {
    const int m = per_head.cols;
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return per_head.at(head, a) > per_head.at(head, b);
    });
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace

CompressedKV compress_kv(int layer_index, const Tensor3& q, const Tensor3& k,
                         const Tensor3& v, const ScoringConfig& config) {
    config.validate();
    const int n = k.n1;
    const int window = config.window_size;
    if (n <= window)
        throw ArgumentError("compress_kv: need n > window, got n=" + std::to_string(n));
    if (q.n0 % k.n0 != 0)
        throw ArgumentError("compress_kv: query heads not a multiple of KV heads");
    const int group = q.n0 / k.n0;
    const int d = k.n2;

    // Window slice of Q.
    Tensor3 q_window(q.n0, window, d);
    for (int h = 0; h < q.n0; ++h)
        for (int t = 0; t < window; ++t)
            std::copy(q.row(h, n - window + t), q.row(h, n - window + t) + d,
                      q_window.row(h, t));

    Tensor3 a = window_attention(q_window, k);
    Matrix hist = past_histogram(a, window, n);
    Matrix pooled = kernels::avg_pool_rows(hist, config.kernel_size);
    PooledScores scores = group_sum(pooled, group, layer_index);

    const int keep_past = std::min(config.kv_budget, n) - window;
    CompressedKV out;
    out.scores = std::move(scores);
    out.retained.resize(k.n0);
    out.keys.resize(k.n0);
    out.values.resize(k.n0);
    for (int h = 0; h < k.n0; ++h) {
        std::vector<int> idx = top_indices(out.scores.per_head, h, keep_past);
        for (int w = 0; w < window; ++w) idx.push_back(n - window + w);
        out.retained[h] = std::move(idx);
        Matrix kk(0, d), vv(0, d);
        kk.data.reserve(std::size_t(out.retained[h].size()) * d);
        vv.data.reserve(std::size_t(out.retained[h].size()) * d);
        for (int row : out.retained[h]) {
            kk.append_row(k.row(h, row));
            vv.append_row(v.row(h, row));
        }
        out.keys[h] = std::move(kk);
        out.values[h] = std::move(vv);
    }
    return out;
}

CompressedKV get_ranks(int layer_index, const Tensor3& q, const Tensor3& k,
                       const Tensor3& v, const ScoringConfig& config,
                       RankCache& rank_cache) {
    CompressedKV out = compress_kv(layer_index, q, k, v, config);
    std::vector<double> quantized(out.scores.reduced_f32.begin(),
                                  out.scores.reduced_f32.end());
    rank_cache.push(rank_desc(quantized, layer_index));
    return out;
}

}  // namespace aslkv
