#include "aslkv/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aslkv/types.hpp"

namespace aslkv::reference {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ArgumentError("reference matmul: inner dim mismatch");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
            c.at(i, j) = s;
        }
    return c;
}

Tensor3 causal_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v) {
    const int hq = q.n0, n = q.n1, d = q.n2;
    const int group = hq / k.n0;
    const double scale = 1.0 / std::sqrt(double(d));
    Tensor3 out(hq, n, d);
    for (int h = 0; h < hq; ++h) {
        const int g = h / group;
        for (int t = 0; t < n; ++t) {
            std::vector<double> logit(t + 1);
            for (int j = 0; j <= t; ++j) {
                double s = 0.0;
                for (int e = 0; e < d; ++e) s += q.at(h, t, e) * k.at(g, j, e);
                logit[j] = s * scale;
            }
            double mx = logit[0];
            for (int j = 1; j <= t; ++j) mx = std::max(mx, logit[j]);
            double z = 0.0;
            for (int j = 0; j <= t; ++j) {
                logit[j] = std::exp(logit[j] - mx);
                z += logit[j];
            }
            for (int j = 0; j <= t; ++j) {
                const double w = logit[j] / z;
                for (int e = 0; e < d; ++e) out.at(h, t, e) += w * v.at(g, j, e);
            }
        }
    }
    return out;
}

Tensor3 window_attention_probs(const Tensor3& q, const Tensor3& k, int window) {
    const int hq = q.n0, n = k.n1, d = q.n2;
    if (window < 1 || window > n) throw ArgumentError("reference window_attention: bad window");
    const int group = hq / k.n0;
    const int q_base = q.n1 - window;
    const double scale = 1.0 / std::sqrt(double(d));
    Tensor3 a(hq, window, n);
    for (int h = 0; h < hq; ++h) {
        const int g = h / group;
        for (int t = 0; t < window; ++t) {
            const int limit = n - window + t;
            for (int j = 0; j <= limit; ++j) {
                double s = 0.0;
                for (int e = 0; e < d; ++e) s += q.at(h, q_base + t, e) * k.at(g, j, e);
                a.at(h, t, j) = s * scale;
            }
            double mx = a.at(h, t, 0);
            for (int j = 1; j <= limit; ++j) mx = std::max(mx, a.at(h, t, j));
            double z = 0.0;
            for (int j = 0; j <= limit; ++j) {
                a.at(h, t, j) = std::exp(a.at(h, t, j) - mx);
                z += a.at(h, t, j);
            }
            for (int j = 0; j <= limit; ++j) a.at(h, t, j) /= z;
        }
    }
    return a;
}

Matrix avg_pool_rows(const Matrix& u, int kernel) {
    Matrix out(u.rows, u.cols);
    for (int h = 0; h < u.rows; ++h) {
        auto pooled = avg_pool_1d(std::span<const double>(u.row(h), std::size_t(u.cols)), kernel);
        std::copy(pooled.begin(), pooled.end(), out.row(h));
    }
    return out;
}

std::vector<double> avg_pool_1d(std::span<const double> u, int kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw ArgumentError("reference avg_pool: kernel must be odd");
    const int m = int(u.size());
    const int r = kernel / 2;
    std::vector<double> out(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int i = j - r; i <= j + r; ++i)
            if (i >= 0 && i < m) s += u[i];
        out[j] = s / double(kernel);
    }
    return out;
}

std::vector<int> rank_desc(std::span<const double> scores) {
    const int m = int(scores.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    std::vector<int> ranks(m);
    for (int r = 0; r < m; ++r) ranks[order[r]] = r;
    return ranks;
}

Tensor3 multihead_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v) {
    const int h = q.n0, n = q.n1, d = q.n2;
    const double scale = 1.0 / std::sqrt(double(d));
    Tensor3 out(h, n, d);
    for (int hh = 0; hh < h; ++hh)
        for (int t = 0; t < n; ++t) {
            std::vector<double> w(t + 1);
            for (int j = 0; j <= t; ++j) {
                double s = 0.0;
                for (int e = 0; e < d; ++e) s += q.at(hh, t, e) * k.at(hh, j, e);
                w[j] = s * scale;
            }
            double mx = *std::max_element(w.begin(), w.end());
            double z = 0.0;
            for (auto& x : w) {
                x = std::exp(x - mx);
                z += x;
            }
            for (int j = 0; j <= t; ++j)
                for (int e = 0; e < d; ++e) out.at(hh, t, e) += (w[j] / z) * v.at(hh, j, e);
        }
    return out;
}

std::vector<float> reduced_scores(const Tensor3& q, const Tensor3& k, int window,
                                  int kernel) {
    const int hq = q.n0, n = k.n1;
    if (n <= window) throw ArgumentError("reference reduced_scores: need n > window");
    const int m = n - window;
    const int group = hq / k.n0;

    Tensor3 a = window_attention_probs(q, k, window);
    // past-only histogram
    Matrix hist(hq, m);
    for (int h = 0; h < hq; ++h)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int t = 0; t < window; ++t) s += a.at(h, t, j);
            hist.at(h, j) = s;
        }
    Matrix pooled = avg_pool_rows(hist, kernel);
    // sum over group members, then over KV heads
    std::vector<double> reduced(m, 0.0);
    for (int g = 0; g < k.n0; ++g)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int e = 0; e < group; ++e) s += pooled.at(g * group + e, j);
            reduced[j] += s;
        }
    std::vector<float> out(m);
    for (int j = 0; j < m; ++j) out[j] = float(reduced[j]);
    return out;
}

OfflineDecision offline_replay(const std::vector<std::vector<float>>& scores,
                               double tau, int l_min, int l_obs, int kv_budget,
                               int window) {
    const int records = int(scores.size());
    if (records == 0) throw ArgumentError("offline_replay: empty score list");
    const int t_len = int(scores[0].size());
    const int record_start = l_min - l_obs + 1;
    if (record_start < 0) throw ArgumentError("offline_replay: l_min < l_obs - 1");

    OfflineDecision out;
    out.ranks.resize(records);
    for (int l = record_start; l < records; ++l) {
        std::vector<double> s(scores[l].begin(), scores[l].end());
        out.ranks[l] = rank_desc(s);
    }

    const int k = std::min(kv_budget - window, t_len);
    auto top_of = [&](const std::vector<int>& ranks) {
        std::vector<int> idx;
        for (int t = 0; t < t_len; ++t)
            if (ranks[t] < k) idx.push_back(t);
        return idx;
    };
    auto selection_from = [&](int layer) {
        std::vector<int> sel = top_of(out.ranks[layer]);
        for (int w = 0; w < window; ++w) sel.push_back(t_len + w);
        std::sort(sel.begin(), sel.end());
        sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
        return sel;
    };

    bool init_set = false;
    double init_var = 0.0;
    for (int layer = l_min; layer < records; ++layer) {
        // union of per-layer top-k over the lookback window
        std::vector<char> in_union(t_len, 0);
        for (int l = layer - l_obs + 1; l <= layer; ++l)
            for (int t : top_of(out.ranks[l])) in_union[t] = 1;
        // two-pass population variance per union token, averaged
        double acc = 0.0;
        int count = 0;
        for (int t = 0; t < t_len; ++t) {
            if (!in_union[t]) continue;
            double mean = 0.0;
            for (int l = layer - l_obs + 1; l <= layer; ++l) mean += out.ranks[l][t];
            mean /= double(l_obs);
            double var = 0.0;
            for (int l = layer - l_obs + 1; l <= layer; ++l) {
                const double dlt = out.ranks[l][t] - mean;
                var += dlt * dlt;
            }
            acc += var / double(l_obs);
            ++count;
        }
        const double var_top = acc / double(count);
        double ratio;
        if (!init_set) {
            init_set = true;
            init_var = var_top;
            ratio = 1.0;
        } else if (init_var == 0.0) {
            ratio = 0.0;
        } else {
            ratio = var_top / init_var;
        }
        out.ratios.emplace_back(layer, ratio);
        if (ratio < tau) {
            out.selection_layer = layer;
            out.fallback = false;
            out.selected = selection_from(layer);
            return out;
        }
    }
    out.selection_layer = records - 1;
    out.fallback = true;
    out.selected = selection_from(records - 1);
    return out;
}

}  // namespace aslkv::reference
