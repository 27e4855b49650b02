#include "aslkv/kernels.hpp"

#include <cmath>

#include "aslkv/types.hpp"

namespace aslkv {

Tensor3 split_heads(const Matrix& x, int heads, int dim) {
    if (x.cols != heads * dim)
        throw ArgumentError("split_heads: cols " + std::to_string(x.cols) + " != " +
                            std::to_string(heads) + "*" + std::to_string(dim));
    Tensor3 t(heads, x.rows, dim);
    for (int h = 0; h < heads; ++h)
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < dim; ++j) t.at(h, i, j) = x.at(i, h * dim + j);
    return t;
}

Matrix merge_heads(const Tensor3& t) {
    Matrix x(t.n1, t.n0 * t.n2);
    for (int h = 0; h < t.n0; ++h)
        for (int i = 0; i < t.n1; ++i)
            for (int j = 0; j < t.n2; ++j) x.at(i, h * t.n2 + j) = t.at(h, i, j);
    return x;
}

}  // namespace aslkv

namespace aslkv::kernels {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ArgumentError("matmul: inner dims " + std::to_string(a.cols) + " vs " +
                            std::to_string(b.rows));
    Matrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += ar[k] * b.at(k, j);
            cr[j] = s;
        }
    }
    return c;
}

Tensor3 causal_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v) {
    const int hq = q.n0, n = q.n1, d = q.n2;
    const int hk = k.n0;
    if (hk == 0 || hq % hk != 0)
        throw ArgumentError("causal_attention: query heads " + std::to_string(hq) +
                            " not a multiple of KV heads " + std::to_string(hk));
    if (k.n1 != n || v.n1 != n || k.n2 != d || v.n2 != d)
        throw ArgumentError("causal_attention: inconsistent K/V shape");
    const int group = hq / hk;
    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));

    Tensor3 out(hq, n, d);
#pragma omp parallel for collapse(2) schedule(static)
    for (int h = 0; h < hq; ++h) {
        for (int t = 0; t < n; ++t) {
            const int g = h / group;
            const double* qi = q.row(h, t);
            std::vector<double> p(t + 1);
            double mx = -1e300;
            for (int j = 0; j <= t; ++j) {
                const double* kj = k.row(g, j);
                double s = 0.0;
                for (int e = 0; e < d; ++e) s += qi[e] * kj[e];
                p[j] = s * inv_sqrt_d;
                if (p[j] > mx) mx = p[j];
            }
            double z = 0.0;
            for (int j = 0; j <= t; ++j) {
                p[j] = std::exp(p[j] - mx);
                z += p[j];
            }
            double* o = out.row(h, t);
            for (int j = 0; j <= t; ++j) {
                const double w = p[j] / z;
                const double* vj = v.row(g, j);
                for (int e = 0; e < d; ++e) o[e] += w * vj[e];
            }
        }
    }
    return out;
}

Tensor3 window_attention_probs(const Tensor3& q, const Tensor3& k, int window) {
    const int hq = q.n0, n = k.n1, d = q.n2;
    const int hk = k.n0;
    if (window < 1 || window > n)
        throw ArgumentError("window_attention: window " + std::to_string(window) +
                            " out of range for n=" + std::to_string(n));
    if (hk == 0 || hq % hk != 0)
        throw ArgumentError("window_attention: query heads " + std::to_string(hq) +
                            " not a multiple of KV heads " + std::to_string(hk));
    if (k.n2 != d) throw ArgumentError("window_attention: head dim mismatch");
    const int group = hq / hk;
    const int q_base = q.n1 - window;  // window row t is absolute position q_base + t
    if (q_base < 0) throw ArgumentError("window_attention: fewer queries than window");
    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));

    Tensor3 a(hq, window, n);
#pragma omp parallel for collapse(2) schedule(static)
    for (int h = 0; h < hq; ++h) {
        for (int t = 0; t < window; ++t) {
            const int g = h / group;
            const int limit = n - window + t;  // last attendable position
            const double* qi = q.row(h, q_base + t);
            double* row = a.row(h, t);
            double mx = -1e300;
            for (int j = 0; j <= limit; ++j) {
                const double* kj = k.row(g, j);
                double s = 0.0;
                for (int e = 0; e < d; ++e) s += qi[e] * kj[e];
                row[j] = s * inv_sqrt_d;
                if (row[j] > mx) mx = row[j];
            }
            double z = 0.0;
            for (int j = 0; j <= limit; ++j) {
                row[j] = std::exp(row[j] - mx);
                z += row[j];
            }
            for (int j = 0; j <= limit; ++j) row[j] /= z;
            // masked tail stays exactly zero
        }
    }
    return a;
}

Matrix avg_pool_rows(const Matrix& u, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw ArgumentError("avg_pool: kernel must be odd and >= 1, got " +
                            std::to_string(kernel));
    const int m = u.cols;
    const int r = kernel / 2;
    Matrix out(u.rows, m);
#pragma omp parallel for schedule(static)
    for (int h = 0; h < u.rows; ++h) {
        const double* src = u.row(h);
        double* dst = out.row(h);
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            const int lo = j - r < 0 ? 0 : j - r;
            const int hi = j + r >= m ? m - 1 : j + r;
            for (int i = lo; i <= hi; ++i) s += src[i];
            dst[j] = s / double(kernel);
        }
    }
    return out;
}

}  // namespace aslkv::kernels
