#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace kbin {

// Dense row-major matrix of doubles. Just enough linear algebra for the
// embedding models; rows are handed out as spans.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// out[r] = a.row(r) . b.row(r_b) accumulated over b rows: out = a * b^T.
// a: n x k, b: m x k, out: n x m. Each output cell is one serial dot product.
inline void matmul_abt(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_abt: inner dimensions differ");
    out.rows = a.rows;
    out.cols = b.rows;
    out.data.assign(a.rows * b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* oi = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < a.cols; ++t) acc += ai[t] * bj[t];
            oi[j] = acc;
        }
    }
}

// out = a * b with a: n x k, b: k x m, out: n x m. ikj order, rows of b
// traversed contiguously; per-cell accumulation order is fixed.
inline void matmul_ab(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul_ab: inner dimensions differ");
    out.rows = a.rows;
    out.cols = b.cols;
    out.data.assign(a.rows * b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* oi = out.row(i);
        for (std::size_t t = 0; t < a.cols; ++t) {
            const double s = ai[t];
            if (s == 0.0) continue;
            const double* bt = b.row(t);
            for (std::size_t j = 0; j < b.cols; ++j) oi[j] += s * bt[j];
        }
    }
}

// out += a^T * b with a: n x k, b: n x m, out: k x m.
inline void accumulate_atb(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows != b.rows) throw std::invalid_argument("accumulate_atb: row counts differ");
    if (out.rows != a.cols || out.cols != b.cols) throw std::invalid_argument("accumulate_atb: bad output shape");
    for (std::size_t n = 0; n < a.rows; ++n) {
        const double* an = a.row(n);
        const double* bn = b.row(n);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double s = an[i];
            if (s == 0.0) continue;
            double* oi = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) oi[j] += s * bn[j];
        }
    }
}

}  // namespace kbin
