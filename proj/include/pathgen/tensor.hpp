#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pathgen/error.hpp"
#include "pathgen/rng.hpp"

namespace pathgen {

// Dense rank-2 tensor, row-major. Training runs in float, verification
// (gradient checking) in double; everything templated on the scalar type
// shares one code path.
template <typename T>
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, T(0)) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }

    std::array<int, 2> shape() const { return {rows, cols}; }
    size_t size() const { return v.size(); }

    T& at(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
    const T& at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
    T* row(int i) { return v.data() + static_cast<size_t>(i) * cols; }
    const T* row(int i) const { return v.data() + static_cast<size_t>(i) * cols; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(rows, cols);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <typename T>
void init_uniform(Tensor<T>& t, Rng& rng, double lo, double hi) {
    for (auto& x : t.v) x = static_cast<T>(rng.uniform_range(lo, hi));
}

// C (+)= op(A) * op(B) for (ta, tb) in {NN, NT, TN}. Loop orders are chosen
// so the inner loop runs over contiguous memory and vectorizes.
template <typename T>
void gemm(bool ta, bool tb, const Tensor<T>& A, const Tensor<T>& B, Tensor<T>& C,
          bool accumulate) {
    int m = ta ? A.cols : A.rows;
    int k = ta ? A.rows : A.cols;
    int kb = tb ? B.cols : B.rows;
    int n = tb ? B.rows : B.cols;
    if (k != kb) throw Error("gemm: inner dimension mismatch");
    if (C.rows != m || C.cols != n) throw Error("gemm: output shape mismatch");
    if (!accumulate) C.fill(T(0));

    if (!ta && !tb) {
        // C[i,:] += A[i,k] * B[k,:]
        for (int i = 0; i < m; ++i) {
            T* c = C.row(i);
            const T* a = A.row(i);
            for (int p = 0; p < k; ++p) {
                T av = a[p];
                if (av == T(0)) continue;
                const T* b = B.row(p);
                for (int j = 0; j < n; ++j) c[j] += av * b[j];
            }
        }
    } else if (!ta && tb) {
        // C[i,j] += dot(A[i,:], B[j,:])
        for (int i = 0; i < m; ++i) {
            const T* a = A.row(i);
            T* c = C.row(i);
            for (int j = 0; j < n; ++j) {
                const T* b = B.row(j);
                T acc = T(0);
                for (int p = 0; p < k; ++p) acc += a[p] * b[p];
                c[j] += acc;
            }
        }
    } else if (ta && !tb) {
        // C[i,:] += A[p,i] * B[p,:]
        for (int p = 0; p < k; ++p) {
            const T* a = A.row(p);
            const T* b = B.row(p);
            for (int i = 0; i < m; ++i) {
                T av = a[i];
                if (av == T(0)) continue;
                T* c = C.row(i);
                for (int j = 0; j < n; ++j) c[j] += av * b[j];
            }
        }
    } else {
        throw Error("gemm: TT variant not supported");
    }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& A, const Tensor<T>& B) {
    Tensor<T> C(A.rows, B.cols);
    gemm(false, false, A, B, C, false);
    return C;
}

}  // namespace pathgen
