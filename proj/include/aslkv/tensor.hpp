#pragma once

#include <cstddef>
#include <vector>

namespace aslkv {

// Dense row-major matrix of doubles.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(std::size_t(r) * std::size_t(c), 0.0) {}

    double& at(int r, int c) { return data[std::size_t(r) * cols + c]; }
    double at(int r, int c) const { return data[std::size_t(r) * cols + c]; }
    double* row(int r) { return data.data() + std::size_t(r) * cols; }
    const double* row(int r) const { return data.data() + std::size_t(r) * cols; }

    void append_row(const double* src) {
        data.insert(data.end(), src, src + cols);
        ++rows;
    }

    bool operator==(const Matrix& o) const = default;
};

// [n0 x n1 x n2] tensor of doubles, used throughout as [heads x tokens x dim].
struct Tensor3 {
    int n0 = 0;
    int n1 = 0;
    int n2 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int a, int b, int c)
        : n0(a), n1(b), n2(c), data(std::size_t(a) * b * c, 0.0) {}

    double& at(int i, int j, int k) {
        return data[(std::size_t(i) * n1 + j) * n2 + k];
    }
    double at(int i, int j, int k) const {
        return data[(std::size_t(i) * n1 + j) * n2 + k];
    }
    double* row(int i, int j) { return data.data() + (std::size_t(i) * n1 + j) * n2; }
    const double* row(int i, int j) const {
        return data.data() + (std::size_t(i) * n1 + j) * n2;
    }

    bool operator==(const Tensor3& o) const = default;
};

// [n x heads*dim] row-major activations -> [heads x n x dim].
Tensor3 split_heads(const Matrix& x, int heads, int dim);

// [heads x n x dim] -> [n x heads*dim].
Matrix merge_heads(const Tensor3& t);

}  // namespace aslkv
