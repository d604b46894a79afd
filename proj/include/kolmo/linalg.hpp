#pragma once
// Dense row-major matrices and the three product shapes the network needs.
//
// Inner loops are written in axpy form (no scalar reductions) so they
// vectorize under strict FP semantics, and every output element is
// accumulated in a fixed order regardless of thread count: row-parallel
// products own whole output rows, and the batch-summed product combines
// fixed-size batch chunks in ascending chunk order.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "kolmo/parallel.hpp"

namespace kolmo {

template <class T>
struct Mat {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(int64_t r, int64_t c) : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c)) {}

    T* row(int64_t i) { return a.data() + i * cols; }
    const T* row(int64_t i) const { return a.data() + i * cols; }
    T& operator()(int64_t i, int64_t j) { return a[static_cast<size_t>(i * cols + j)]; }
    T operator()(int64_t i, int64_t j) const { return a[static_cast<size_t>(i * cols + j)]; }
    void fill(T v) { a.assign(a.size(), v); }
};

using Matrix = Mat<double>;

template <class T>
Mat<T> transpose(const Mat<T>& A) {
    Mat<T> B(A.cols, A.rows);
    for (int64_t i = 0; i < A.rows; ++i)
        for (int64_t j = 0; j < A.cols; ++j) B(j, i) = A(i, j);
    return B;
}

// C (m x n) = A (m x k) * B (k x n).
template <class T>
void matmul_ab(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul_ab: inner dimensions differ");
    C = Mat<T>(A.rows, B.cols);
    parallel_for(A.rows, [&](int64_t r0, int64_t r1) {
        for (int64_t i = r0; i < r1; ++i) {
            const T* ai = A.row(i);
            T* ci = C.row(i);
            for (int64_t j = 0; j < B.cols; ++j) ci[j] = T(0);
            for (int64_t p = 0; p < A.cols; ++p) {
                const T c = ai[p];
                const T* bp = B.row(p);
                for (int64_t j = 0; j < B.cols; ++j) ci[j] += c * bp[j];
            }
        }
    });
}

// C (m x n) = A (m x k) * B^T, with B stored (n x k).
template <class T>
void matmul_abt(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    if (A.cols != B.cols) throw std::invalid_argument("matmul_abt: inner dimensions differ");
    const Mat<T> bt = transpose(B);
    matmul_ab(A, bt, C);
}

template <class T>
void accumulate_atb_(const Mat<T>& A, const Mat<T>& B, int64_t p0, int64_t p1, Mat<T>& C) {
    for (int64_t p = p0; p < p1; ++p) {
        const T* ap = A.row(p);
        const T* bp = B.row(p);
        for (int64_t i = 0; i < A.cols; ++i) {
            const T c = ap[i];
            T* ci = C.row(i);
            for (int64_t j = 0; j < B.cols; ++j) ci[j] += c * bp[j];
        }
    }
}

// C (k x n) = A^T * B with A (m x k), B (m x n).  The batch dimension m is
// reduced over fixed chunks combined in ascending order.
template <class T>
void matmul_atb(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    if (A.rows != B.rows) throw std::invalid_argument("matmul_atb: batch dimensions differ");
    const int64_t m = A.rows;
    const int64_t chunks = m == 0 ? 0 : (m + kParallelChunk - 1) / kParallelChunk;
    C = Mat<T>(A.cols, B.cols);
    if (chunks == 0) return;
    if (chunks == 1) {
        accumulate_atb_(A, B, 0, m, C);
        return;
    }
    std::vector<Mat<T>> partial(static_cast<size_t>(chunks));
    parallel_for(m, [&](int64_t r0, int64_t r1) {
        const int64_t c = r0 / kParallelChunk;
        partial[static_cast<size_t>(c)] = Mat<T>(A.cols, B.cols);
        accumulate_atb_(A, B, r0, r1, partial[static_cast<size_t>(c)]);
    });
    for (int64_t c = 0; c < chunks; ++c) {
        const auto& p = partial[static_cast<size_t>(c)];
        for (size_t i = 0; i < C.a.size(); ++i) C.a[i] += p.a[i];
    }
}

template <class T>
T dot(std::span<const T> x, std::span<const T> y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
    T acc = T(0);
    for (size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

} // namespace kolmo
