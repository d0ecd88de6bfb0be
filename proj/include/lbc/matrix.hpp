#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lbc/common.hpp"

namespace lbc {

// Dense row-major matrix of doubles. Small enough on purpose; the whole
// engine runs on three gemm variants below.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    std::span<const double> row_span(std::size_t i) const { return {row(i), cols}; }

    void set_zero() { a.assign(a.size(), 0.0); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// C = A * B
inline void matmul(const Matrix& A, const Matrix& B, Matrix& C) {
    if (A.cols != B.rows) throw UsageError("matmul: inner dimensions differ");
    C.rows = A.rows;
    C.cols = B.cols;
    C.a.assign(A.rows * B.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double* ci = C.row(i);
        const double* ai = A.row(i);
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = ai[k];
            const double* bk = B.row(k);
            for (std::size_t j = 0; j < B.cols; ++j) ci[j] += aik * bk[j];
        }
    }
}

// C = A * B^T
inline void matmul_nt(const Matrix& A, const Matrix& B, Matrix& C) {
    if (A.cols != B.cols) throw UsageError("matmul_nt: inner dimensions differ");
    C.rows = A.rows;
    C.cols = B.rows;
    C.a.assign(A.rows * B.rows, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (std::size_t j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < A.cols; ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
}

// C += A^T * B  (C must already have shape A.cols x B.cols)
inline void matmul_tn_acc(const Matrix& A, const Matrix& B, Matrix& C) {
    if (A.rows != B.rows) throw UsageError("matmul_tn_acc: outer dimensions differ");
    if (C.rows != A.cols || C.cols != B.cols) throw UsageError("matmul_tn_acc: bad output shape");
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        const double* bi = B.row(i);
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            double* ck = C.row(k);
            for (std::size_t j = 0; j < B.cols; ++j) ck[j] += aik * bi[j];
        }
    }
}

inline void add_row_vector(Matrix& M, std::span<const double> v) {
    if (v.size() != M.cols) throw UsageError("add_row_vector: length mismatch");
    for (std::size_t i = 0; i < M.rows; ++i) {
        double* mi = M.row(i);
        for (std::size_t j = 0; j < M.cols; ++j) mi[j] += v[j];
    }
}

inline void column_sums(const Matrix& M, std::span<double> out) {
    if (out.size() != M.cols) throw UsageError("column_sums: length mismatch");
    for (std::size_t j = 0; j < M.cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < M.rows; ++i) {
        const double* mi = M.row(i);
        for (std::size_t j = 0; j < M.cols; ++j) out[j] += mi[j];
    }
}

}  // namespace lbc
