#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pathgen/error.hpp"
#include "pathgen/tensor.hpp"

namespace pathgen {

// Reverse-mode autodiff over rank-2 tensors. Ops append nodes to the tape;
// backward() replays registered closures in reverse creation order. Handles
// are plain indices so the node vector may reallocate while building.
template <typename T>
class Tape {
   public:
    using Handle = int;

    Handle leaf(Tensor<T> val, bool needs_grad) {
        return add_node(std::move(val), needs_grad);
    }

    const Tensor<T>& value(Handle h) const { return nodes_[check(h)].val; }
    const Tensor<T>& grad(Handle h) const {
        const Node& n = nodes_[check(h)];
        if (!n.needs_grad) throw Error("tape: grad requested for non-differentiable node");
        return n.grad;
    }

    Handle matmul(Handle a, Handle b) {
        const Tensor<T>& A = val(a);
        const Tensor<T>& B = val(b);
        Tensor<T> C(A.rows, B.cols);
        gemm(false, false, A, B, C, false);
        Handle out = add_node(std::move(C), wants(a) || wants(b));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, b, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                if (wants(a)) gemm(false, true, dC, nodes_[b].val, nodes_[a].grad, true);
                if (wants(b)) gemm(true, false, nodes_[a].val, dC, nodes_[b].grad, true);
            };
        }
        return out;
    }

    // A [m,k] times B [n,k] transposed: C[i,j] = dot(A_i, B_j).
    Handle matmul_nt(Handle a, Handle b) {
        const Tensor<T>& A = val(a);
        const Tensor<T>& B = val(b);
        Tensor<T> C(A.rows, B.rows);
        gemm(false, true, A, B, C, false);
        Handle out = add_node(std::move(C), wants(a) || wants(b));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, b, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                if (wants(a)) gemm(false, false, dC, nodes_[b].val, nodes_[a].grad, true);
                if (wants(b)) gemm(true, false, dC, nodes_[a].val, nodes_[b].grad, true);
            };
        }
        return out;
    }

    Handle add(Handle a, Handle b) {
        const Tensor<T>& A = val(a);
        const Tensor<T>& B = val(b);
        if (!A.same_shape(B)) throw Error("tape add: shape mismatch");
        Tensor<T> C = A;
        for (size_t i = 0; i < C.v.size(); ++i) C.v[i] += B.v[i];
        Handle out = add_node(std::move(C), wants(a) || wants(b));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, b, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                if (wants(a))
                    for (size_t i = 0; i < dC.v.size(); ++i) nodes_[a].grad.v[i] += dC.v[i];
                if (wants(b))
                    for (size_t i = 0; i < dC.v.size(); ++i) nodes_[b].grad.v[i] += dC.v[i];
            };
        }
        return out;
    }

    // A [m,n] plus row vector b [1,n] broadcast over rows.
    Handle add_rowvec(Handle a, Handle b) {
        const Tensor<T>& A = val(a);
        const Tensor<T>& B = val(b);
        if (B.rows != 1 || B.cols != A.cols) throw Error("tape add_rowvec: shape mismatch");
        Tensor<T> C = A;
        for (int i = 0; i < C.rows; ++i) {
            T* c = C.row(i);
            for (int j = 0; j < C.cols; ++j) c[j] += B.v[j];
        }
        Handle out = add_node(std::move(C), wants(a) || wants(b));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, b, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                if (wants(a))
                    for (size_t i = 0; i < dC.v.size(); ++i) nodes_[a].grad.v[i] += dC.v[i];
                if (wants(b)) {
                    Tensor<T>& dB = nodes_[b].grad;
                    for (int i = 0; i < dC.rows; ++i) {
                        const T* d = dC.row(i);
                        for (int j = 0; j < dC.cols; ++j) dB.v[j] += d[j];
                    }
                }
            };
        }
        return out;
    }

    Handle mul(Handle a, Handle b) {
        const Tensor<T>& A = val(a);
        const Tensor<T>& B = val(b);
        if (!A.same_shape(B)) throw Error("tape mul: shape mismatch");
        Tensor<T> C = A;
        for (size_t i = 0; i < C.v.size(); ++i) C.v[i] *= B.v[i];
        Handle out = add_node(std::move(C), wants(a) || wants(b));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, b, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                if (wants(a))
                    for (size_t i = 0; i < dC.v.size(); ++i)
                        nodes_[a].grad.v[i] += dC.v[i] * nodes_[b].val.v[i];
                if (wants(b))
                    for (size_t i = 0; i < dC.v.size(); ++i)
                        nodes_[b].grad.v[i] += dC.v[i] * nodes_[a].val.v[i];
            };
        }
        return out;
    }

    Handle scale(Handle a, double s) {
        Tensor<T> C = val(a);
        for (auto& x : C.v) x = static_cast<T>(x * s);
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, s, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                for (size_t i = 0; i < dC.v.size(); ++i)
                    nodes_[a].grad.v[i] += static_cast<T>(dC.v[i] * s);
            };
        }
        return out;
    }

    Handle tanh_(Handle a) {
        Tensor<T> C = val(a);
        for (auto& x : C.v) x = std::tanh(x);
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out] {
                const Tensor<T>& y = nodes_[out].val;
                const Tensor<T>& dC = nodes_[out].grad;
                for (size_t i = 0; i < dC.v.size(); ++i)
                    nodes_[a].grad.v[i] += dC.v[i] * (T(1) - y.v[i] * y.v[i]);
            };
        }
        return out;
    }

    Handle sigmoid_(Handle a) {
        Tensor<T> C = val(a);
        for (auto& x : C.v) x = sigmoid_scalar(x);
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out] {
                const Tensor<T>& y = nodes_[out].val;
                const Tensor<T>& dC = nodes_[out].grad;
                for (size_t i = 0; i < dC.v.size(); ++i)
                    nodes_[a].grad.v[i] += dC.v[i] * y.v[i] * (T(1) - y.v[i]);
            };
        }
        return out;
    }

    // tanh-approximation gelu, the GPT-2 activation.
    Handle gelu(Handle a) {
        const T c0 = T(0.7978845608028654);  // sqrt(2/pi)
        const T c1 = T(0.044715);
        Tensor<T> C = val(a);
        for (auto& x : C.v) {
            T u = c0 * (x + c1 * x * x * x);
            x = T(0.5) * x * (T(1) + std::tanh(u));
        }
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out, c0, c1] {
                const Tensor<T>& X = nodes_[a].val;
                const Tensor<T>& dC = nodes_[out].grad;
                for (size_t i = 0; i < dC.v.size(); ++i) {
                    T x = X.v[i];
                    T u = c0 * (x + c1 * x * x * x);
                    T th = std::tanh(u);
                    T d = T(0.5) * (T(1) + th) +
                          T(0.5) * x * (T(1) - th * th) * c0 * (T(1) + T(3) * c1 * x * x);
                    nodes_[a].grad.v[i] += dC.v[i] * d;
                }
            };
        }
        return out;
    }

    // Rows of A selected by index; duplicates accumulate in backward.
    Handle gather_rows(Handle a, std::vector<int> idx) {
        const Tensor<T>& A = val(a);
        Tensor<T> C(static_cast<int>(idx.size()), A.cols);
        for (size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] < 0 || idx[i] >= A.rows) throw Error("tape gather_rows: index out of range");
            std::copy(A.row(idx[i]), A.row(idx[i]) + A.cols, C.row(static_cast<int>(i)));
        }
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out, idx = std::move(idx)] {
                const Tensor<T>& dC = nodes_[out].grad;
                Tensor<T>& dA = nodes_[a].grad;
                for (size_t i = 0; i < idx.size(); ++i) {
                    const T* s = dC.row(static_cast<int>(i));
                    T* d = dA.row(idx[i]);
                    for (int j = 0; j < dC.cols; ++j) d[j] += s[j];
                }
            };
        }
        return out;
    }

    Handle slice_cols(Handle a, int c0, int c1) {
        const Tensor<T>& A = val(a);
        if (c0 < 0 || c1 > A.cols || c0 >= c1) throw Error("tape slice_cols: bad range");
        Tensor<T> C(A.rows, c1 - c0);
        for (int i = 0; i < A.rows; ++i)
            std::copy(A.row(i) + c0, A.row(i) + c1, C.row(i));
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out, c0] {
                const Tensor<T>& dC = nodes_[out].grad;
                Tensor<T>& dA = nodes_[a].grad;
                for (int i = 0; i < dC.rows; ++i) {
                    const T* s = dC.row(i);
                    T* d = dA.row(i) + c0;
                    for (int j = 0; j < dC.cols; ++j) d[j] += s[j];
                }
            };
        }
        return out;
    }

    Handle concat_cols(const std::vector<Handle>& parts) {
        if (parts.empty()) throw Error("tape concat_cols: empty");
        int rows = val(parts[0]).rows, cols = 0;
        bool ng = false;
        for (Handle h : parts) {
            if (val(h).rows != rows) throw Error("tape concat_cols: row mismatch");
            cols += val(h).cols;
            ng = ng || wants(h);
        }
        Tensor<T> C(rows, cols);
        int off = 0;
        for (Handle h : parts) {
            const Tensor<T>& A = val(h);
            for (int i = 0; i < rows; ++i)
                std::copy(A.row(i), A.row(i) + A.cols, C.row(i) + off);
            off += A.cols;
        }
        Handle out = add_node(std::move(C), ng);
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, parts, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                int off = 0;
                for (Handle h : parts) {
                    int w = nodes_[h].val.cols;
                    if (wants(h)) {
                        Tensor<T>& dA = nodes_[h].grad;
                        for (int i = 0; i < dC.rows; ++i) {
                            const T* s = dC.row(i) + off;
                            T* d = dA.row(i);
                            for (int j = 0; j < w; ++j) d[j] += s[j];
                        }
                    }
                    off += w;
                }
            };
        }
        return out;
    }

    Handle concat_rows(const std::vector<Handle>& parts) {
        if (parts.empty()) throw Error("tape concat_rows: empty");
        int cols = val(parts[0]).cols, rows = 0;
        bool ng = false;
        for (Handle h : parts) {
            if (val(h).cols != cols) throw Error("tape concat_rows: col mismatch");
            rows += val(h).rows;
            ng = ng || wants(h);
        }
        Tensor<T> C(rows, cols);
        int off = 0;
        for (Handle h : parts) {
            const Tensor<T>& A = val(h);
            std::copy(A.v.begin(), A.v.end(), C.row(off));
            off += A.rows;
        }
        Handle out = add_node(std::move(C), ng);
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, parts, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                int off = 0;
                for (Handle h : parts) {
                    int r = nodes_[h].val.rows;
                    if (wants(h)) {
                        Tensor<T>& dA = nodes_[h].grad;
                        for (size_t i = 0; i < dA.v.size(); ++i)
                            dA.v[i] += dC.row(off)[i];
                    }
                    off += r;
                }
            };
        }
        return out;
    }

    Handle transpose(Handle a) {
        const Tensor<T>& A = val(a);
        Tensor<T> C(A.cols, A.rows);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) C.at(j, i) = A.at(i, j);
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                Tensor<T>& dA = nodes_[a].grad;
                for (int i = 0; i < dC.rows; ++i)
                    for (int j = 0; j < dC.cols; ++j) dA.at(j, i) += dC.at(i, j);
            };
        }
        return out;
    }

    Handle reshape(Handle a, int r, int c) {
        const Tensor<T>& A = val(a);
        if (static_cast<size_t>(r) * c != A.v.size()) throw Error("tape reshape: size mismatch");
        Tensor<T> C(r, c);
        C.v = A.v;
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                for (size_t i = 0; i < dC.v.size(); ++i) nodes_[a].grad.v[i] += dC.v[i];
            };
        }
        return out;
    }

    Handle softmax_rows(Handle a) {
        Tensor<T> C = val(a);
        for (int i = 0; i < C.rows; ++i) softmax_row(C.row(i), C.cols);
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out] {
                const Tensor<T>& y = nodes_[out].val;
                const Tensor<T>& dC = nodes_[out].grad;
                Tensor<T>& dA = nodes_[a].grad;
                for (int i = 0; i < y.rows; ++i) {
                    const T* yr = y.row(i);
                    const T* dr = dC.row(i);
                    T dot = T(0);
                    for (int j = 0; j < y.cols; ++j) dot += dr[j] * yr[j];
                    T* da = dA.row(i);
                    for (int j = 0; j < y.cols; ++j) da[j] += yr[j] * (dr[j] - dot);
                }
            };
        }
        return out;
    }

    // Square score matrix; row i is a softmax over columns j <= i, the
    // rest stay exactly zero.
    Handle causal_softmax_rows(Handle a) {
        const Tensor<T>& A = val(a);
        if (A.rows != A.cols) throw Error("tape causal_softmax_rows: matrix not square");
        Tensor<T> C(A.rows, A.cols);
        for (int i = 0; i < A.rows; ++i) {
            std::copy(A.row(i), A.row(i) + i + 1, C.row(i));
            softmax_row(C.row(i), i + 1);
        }
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out] {
                const Tensor<T>& y = nodes_[out].val;
                const Tensor<T>& dC = nodes_[out].grad;
                Tensor<T>& dA = nodes_[a].grad;
                for (int i = 0; i < y.rows; ++i) {
                    const T* yr = y.row(i);
                    const T* dr = dC.row(i);
                    T dot = T(0);
                    for (int j = 0; j <= i; ++j) dot += dr[j] * yr[j];
                    T* da = dA.row(i);
                    for (int j = 0; j <= i; ++j) da[j] += yr[j] * (dr[j] - dot);
                }
            };
        }
        return out;
    }

    // Per-row normalization with learned gain g [1,n] and bias b [1,n].
    Handle layer_norm(Handle a, Handle g, Handle b) {
        const T eps = T(1e-5);
        const Tensor<T>& A = val(a);
        const Tensor<T>& G = val(g);
        const Tensor<T>& B = val(b);
        if (G.rows != 1 || G.cols != A.cols || B.rows != 1 || B.cols != A.cols)
            throw Error("tape layer_norm: gain/bias shape mismatch");
        Tensor<T> C(A.rows, A.cols);
        int n = A.cols;
        for (int i = 0; i < A.rows; ++i) {
            const T* x = A.row(i);
            T* c = C.row(i);
            T mu = T(0);
            for (int j = 0; j < n; ++j) mu += x[j];
            mu /= n;
            T var = T(0);
            for (int j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
            var /= n;
            T inv = T(1) / std::sqrt(var + eps);
            for (int j = 0; j < n; ++j) c[j] = (x[j] - mu) * inv * G.v[j] + B.v[j];
        }
        Handle out = add_node(std::move(C), wants(a) || wants(g) || wants(b));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, g, b, out, eps] {
                const Tensor<T>& A = nodes_[a].val;
                const Tensor<T>& G = nodes_[g].val;
                const Tensor<T>& dC = nodes_[out].grad;
                int n = A.cols;
                std::vector<T> xhat(n), dxhat(n);
                for (int i = 0; i < A.rows; ++i) {
                    const T* x = A.row(i);
                    const T* d = dC.row(i);
                    T mu = T(0);
                    for (int j = 0; j < n; ++j) mu += x[j];
                    mu /= n;
                    T var = T(0);
                    for (int j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
                    var /= n;
                    T inv = T(1) / std::sqrt(var + eps);
                    for (int j = 0; j < n; ++j) xhat[j] = (x[j] - mu) * inv;
                    if (wants(g)) {
                        T* dg = nodes_[g].grad.v.data();
                        for (int j = 0; j < n; ++j) dg[j] += d[j] * xhat[j];
                    }
                    if (wants(b)) {
                        T* db = nodes_[b].grad.v.data();
                        for (int j = 0; j < n; ++j) db[j] += d[j];
                    }
                    if (wants(a)) {
                        T m1 = T(0), m2 = T(0);
                        for (int j = 0; j < n; ++j) {
                            dxhat[j] = d[j] * G.v[j];
                            m1 += dxhat[j];
                            m2 += dxhat[j] * xhat[j];
                        }
                        m1 /= n;
                        m2 /= n;
                        T* da = nodes_[a].grad.row(i);
                        for (int j = 0; j < n; ++j)
                            da[j] += inv * (dxhat[j] - m1 - xhat[j] * m2);
                    }
                }
            };
        }
        return out;
    }

    Handle mean_rows(Handle a) {
        const Tensor<T>& A = val(a);
        if (A.rows == 0) throw Error("tape mean_rows: empty");
        Tensor<T> C(1, A.cols);
        for (int i = 0; i < A.rows; ++i) {
            const T* x = A.row(i);
            for (int j = 0; j < A.cols; ++j) C.v[j] += x[j];
        }
        for (auto& x : C.v) x /= T(A.rows);
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out] {
                const Tensor<T>& dC = nodes_[out].grad;
                Tensor<T>& dA = nodes_[a].grad;
                T s = T(1) / T(dA.rows);
                for (int i = 0; i < dA.rows; ++i) {
                    T* d = dA.row(i);
                    for (int j = 0; j < dA.cols; ++j) d[j] += dC.v[j] * s;
                }
            };
        }
        return out;
    }

    // Mean negative log softmax probability of the target class, over rows
    // with mask != 0. Output is 1x1.
    Handle cross_entropy_mean(Handle a, std::vector<int> targets, std::vector<int> mask) {
        const Tensor<T>& A = val(a);
        if (static_cast<int>(targets.size()) != A.rows ||
            static_cast<int>(mask.size()) != A.rows)
            throw Error("tape cross_entropy_mean: target/mask length mismatch");
        int count = 0;
        double loss = 0;
        for (int i = 0; i < A.rows; ++i) {
            if (!mask[i]) continue;
            if (targets[i] < 0 || targets[i] >= A.cols)
                throw Error("tape cross_entropy_mean: target out of range");
            ++count;
            loss += -log_softmax_at(A.row(i), A.cols, targets[i]);
        }
        if (count == 0) throw Error("tape cross_entropy_mean: no unmasked rows");
        Tensor<T> C(1, 1);
        C.v[0] = static_cast<T>(loss / count);
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out, targets = std::move(targets),
                              mask = std::move(mask), count] {
                const Tensor<T>& A = nodes_[a].val;
                Tensor<T>& dA = nodes_[a].grad;
                T up = nodes_[out].grad.v[0] / T(count);
                std::vector<T> p(A.cols);
                for (int i = 0; i < A.rows; ++i) {
                    if (!mask[i]) continue;
                    std::copy(A.row(i), A.row(i) + A.cols, p.data());
                    softmax_row(p.data(), A.cols);
                    T* d = dA.row(i);
                    for (int j = 0; j < A.cols; ++j) d[j] += up * p[j];
                    d[targets[i]] -= up;
                }
            };
        }
        return out;
    }

    // Mean binary cross-entropy on logits against targets in [0,1], the
    // numerically stable max(z,0) - z*y + log1p(exp(-|z|)) form. Output 1x1.
    Handle bce_with_logits_mean(Handle a, Tensor<T> targets) {
        const Tensor<T>& A = val(a);
        if (!A.same_shape(targets)) throw Error("tape bce: target shape mismatch");
        if (A.v.empty()) throw Error("tape bce: empty input");
        double loss = 0;
        for (size_t i = 0; i < A.v.size(); ++i) {
            double z = A.v[i], y = targets.v[i];
            loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
        }
        Tensor<T> C(1, 1);
        C.v[0] = static_cast<T>(loss / A.v.size());
        Handle out = add_node(std::move(C), wants(a));
        if (nodes_[out].needs_grad) {
            nodes_[out].bw = [this, a, out, targets = std::move(targets)] {
                const Tensor<T>& A = nodes_[a].val;
                Tensor<T>& dA = nodes_[a].grad;
                T up = nodes_[out].grad.v[0] / T(A.v.size());
                for (size_t i = 0; i < A.v.size(); ++i)
                    dA.v[i] += up * (sigmoid_scalar(A.v[i]) - targets.v[i]);
            };
        }
        return out;
    }

    void backward(Handle loss) {
        Node& ln = nodes_[check(loss)];
        if (ln.val.rows != 1 || ln.val.cols != 1)
            throw Error("tape backward: loss must be a scalar");
        if (!ln.needs_grad) throw Error("tape backward: loss does not require grad");
        ln.grad.v[0] = T(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
            if (nodes_[i].bw) nodes_[i].bw();
    }

    size_t size() const { return nodes_.size(); }

   private:
    struct Node {
        Tensor<T> val;
        Tensor<T> grad;
        bool needs_grad = false;
        std::function<void()> bw;
    };

    std::vector<Node> nodes_;

    int check(Handle h) const {
        if (h < 0 || h >= static_cast<int>(nodes_.size())) throw Error("tape: bad handle");
        return h;
    }
    const Tensor<T>& val(Handle h) const { return nodes_[check(h)].val; }
    bool wants(Handle h) const { return nodes_[h].needs_grad; }

    Handle add_node(Tensor<T> v, bool needs_grad) {
        Node n;
        n.needs_grad = needs_grad;
        if (needs_grad) n.grad = Tensor<T>(v.rows, v.cols);
        n.val = std::move(v);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    static T sigmoid_scalar(T z) {
        if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
        T e = std::exp(z);
        return e / (T(1) + e);
    }

    static void softmax_row(T* x, int n) {
        T mx = x[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
        T sum = T(0);
        for (int j = 0; j < n; ++j) {
            x[j] = std::exp(x[j] - mx);
            sum += x[j];
        }
        for (int j = 0; j < n; ++j) x[j] /= sum;
    }

    static double log_softmax_at(const T* x, int n, int t) {
        double mx = x[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, static_cast<double>(x[j]));
        double sum = 0;
        for (int j = 0; j < n; ++j) sum += std::exp(static_cast<double>(x[j]) - mx);
        return static_cast<double>(x[t]) - mx - std::log(sum);
    }
};

}  // namespace pathgen
