#pragma once

// Forward and hand-written backward passes for every primitive the encoder
// uses.  All functions are pure; backward passes take whatever forward
// context they need explicitly, so there is no graph or tape.

#include <cmath>
#include <cstdint>
#include <utility>

#include "castor/tensor.hpp"

namespace castor {

// ---------------------------------------------------------------------------
// Matrix multiply
// ---------------------------------------------------------------------------

// C[m,n] = A[m,k] * B[k,n] on raw row-major buffers.  The i-k-j order makes
// the inner loop a pure SAXPY over contiguous memory, which auto-vectorizes
// without any reassociation flags.
template <typename T>
void matmul_raw(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            T aval = arow[p];
            if (aval == T(0)) continue;
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aval * brow[j];
        }
    }
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.rank() != 2) throw ShapeMismatch("transpose expects a rank-2 tensor");
    std::size_t m = a.shape[0], n = a.shape[1];
    Tensor<T> out = Tensor<T>::zeros({n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.data[j * m + i] = a.data[i * n + j];
    }
    return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0]) {
        throw ShapeMismatch("matmul: incompatible shapes");
    }
    Tensor<T> c = Tensor<T>::zeros({a.shape[0], b.shape[1]});
    matmul_raw(a.data.data(), b.data.data(), c.data.data(), a.shape[0], a.shape[1],
               b.shape[1]);
    return c;
}

// Gradients of C = A*B:  dA = dC * B^T,  dB = A^T * dC.  Both are computed
// with the same vectorized kernel after an explicit transpose, which costs
// O(kn) against the O(mkn) multiply.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> matmul_backward(const Tensor<T>& a, const Tensor<T>& b,
                                                const Tensor<T>& dc) {
    if (dc.rank() != 2 || dc.shape[0] != a.shape[0] || dc.shape[1] != b.shape[1]) {
        throw ShapeMismatch("matmul_backward: gradient shape mismatch");
    }
    Tensor<T> da = matmul(dc, transpose(b));
    Tensor<T> db = matmul(transpose(a), dc);
    return {std::move(da), std::move(db)};
}

// ---------------------------------------------------------------------------
// Elementwise add and bias broadcast
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    Tensor<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

// A[m,n] + bias[n], broadcast over rows.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias) {
    if (a.rank() != 2 || bias.rank() != 1 || bias.shape[0] != a.shape[1]) {
        throw ShapeMismatch("add_bias: bias must match the column count");
    }
    Tensor<T> out = a;
    std::size_t m = a.shape[0], n = a.shape[1];
    for (std::size_t i = 0; i < m; ++i) {
        T* row = out.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += bias.data[j];
    }
    return out;
}

// d(bias) for the broadcast add: column sums of the upstream gradient.
// d(A) is the upstream gradient itself, so the caller just reuses it.
template <typename T>
Tensor<T> add_bias_backward(const Tensor<T>& dc) {
    if (dc.rank() != 2) throw ShapeMismatch("add_bias_backward expects rank-2 gradient");
    std::size_t m = dc.shape[0], n = dc.shape[1];
    Tensor<T> db = Tensor<T>::zeros({n});
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = dc.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) db.data[j] += row[j];
    }
    return db;
}

// ---------------------------------------------------------------------------
// Row-wise softmax
// ---------------------------------------------------------------------------

// Numerically stable per-row softmax of a rank-2 tensor.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
    if (a.rank() != 2) throw ShapeMismatch("softmax_rows expects a rank-2 tensor");
    std::size_t m = a.shape[0], n = a.shape[1];
    Tensor<T> out = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = a.data.data() + i * n;
        T* orow = out.data.data() + i * n;
        T max_val = row[0];
        for (std::size_t j = 1; j < n; ++j) max_val = std::max(max_val, row[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - max_val);
            sum += orow[j];
        }
        T inv = T(1) / sum;
        for (std::size_t j = 0; j < n; ++j) orow[j] *= inv;
    }
    return out;
}

// dX_ij = Y_ij * (dY_ij - sum_k dY_ik Y_ik), from the softmax Jacobian.
template <typename T>
Tensor<T> softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& dy) {
    require_same_shape(y, dy, "softmax_rows_backward");
    std::size_t m = y.shape[0], n = y.shape[1];
    Tensor<T> dx = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const T* yrow = y.data.data() + i * n;
        const T* dyrow = dy.data.data() + i * n;
        T* dxrow = dx.data.data() + i * n;
        T dot = T(0);
        for (std::size_t j = 0; j < n; ++j) dot += dyrow[j] * yrow[j];
        for (std::size_t j = 0; j < n; ++j) dxrow[j] = yrow[j] * (dyrow[j] - dot);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Layer normalization
// ---------------------------------------------------------------------------

// Small epsilon so normalized rows genuinely have unit variance; the usual
// 1e-5 would visibly bias the variance of short rows.
inline constexpr double kLayerNormEps = 1e-9;

template <typename T>
struct LayerNormResult {
    Tensor<T> y;        // gamma * xhat + beta
    Tensor<T> xhat;     // normalized input, kept for the backward pass
    std::vector<T> inv_std;  // per-row 1/sqrt(var + eps)
};

// Per-row normalization of X[m,n] followed by the affine (gamma, beta).
template <typename T>
LayerNormResult<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                              const Tensor<T>& beta) {
    if (x.rank() != 2 || gamma.rank() != 1 || beta.rank() != 1 ||
        gamma.shape[0] != x.shape[1] || beta.shape[0] != x.shape[1]) {
        throw ShapeMismatch("layer_norm: parameter shapes must match columns");
    }
    std::size_t m = x.shape[0], n = x.shape[1];
    LayerNormResult<T> res{Tensor<T>::zeros({m, n}), Tensor<T>::zeros({m, n}), {}};
    res.inv_std.resize(m);
    const T eps = static_cast<T>(kLayerNormEps);
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = x.data.data() + i * n;
        T mean = T(0);
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<T>(n);
        T var = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            T d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<T>(n);
        T inv_std = T(1) / std::sqrt(var + eps);
        res.inv_std[i] = inv_std;
        T* xh = res.xhat.data.data() + i * n;
        T* yrow = res.y.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            xh[j] = (row[j] - mean) * inv_std;
            yrow[j] = gamma.data[j] * xh[j] + beta.data[j];
        }
    }
    return res;
}

template <typename T>
struct LayerNormGrads {
    Tensor<T> dx;
    Tensor<T> dgamma;
    Tensor<T> dbeta;
};

template <typename T>
LayerNormGrads<T> layer_norm_backward(const LayerNormResult<T>& cache,
                                      const Tensor<T>& gamma, const Tensor<T>& dy) {
    require_same_shape(cache.xhat, dy, "layer_norm_backward");
    std::size_t m = dy.shape[0], n = dy.shape[1];
    LayerNormGrads<T> g{Tensor<T>::zeros({m, n}), Tensor<T>::zeros({n}), Tensor<T>::zeros({n})};
    for (std::size_t i = 0; i < m; ++i) {
        const T* xh = cache.xhat.data.data() + i * n;
        const T* dyrow = dy.data.data() + i * n;
        T* dxrow = g.dx.data.data() + i * n;
        // dxhat = gamma * dy; dx folds in the mean and variance paths:
        // dx = inv_std/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
        T sum_dxhat = T(0);
        T sum_dxhat_xhat = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            T dxhat = gamma.data[j] * dyrow[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xh[j];
            g.dgamma.data[j] += dyrow[j] * xh[j];
            g.dbeta.data[j] += dyrow[j];
        }
        T scale = cache.inv_std[i] / static_cast<T>(n);
        for (std::size_t j = 0; j < n; ++j) {
            T dxhat = gamma.data[j] * dyrow[j];
            dxrow[j] = scale * (static_cast<T>(n) * dxhat - sum_dxhat - xh[j] * sum_dxhat_xhat);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// GELU (exact erf form)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    Tensor<T> out = x;
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    for (T& v : out.data) {
        double xv = static_cast<double>(v);
        v = static_cast<T>(0.5 * xv * (1.0 + std::erf(xv * kInvSqrt2)));
    }
    return out;
}

// d/dx gelu(x) = Phi(x) + x * phi(x), with Phi the standard normal CDF and
// phi its density.
template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    require_same_shape(x, dy, "gelu_backward");
    Tensor<T> dx = x;
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    constexpr double kInvSqrt2Pi = 0.3989422804014326779;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        double xv = static_cast<double>(x.data[i]);
        double cdf = 0.5 * (1.0 + std::erf(xv * kInvSqrt2));
        double pdf = kInvSqrt2Pi * std::exp(-0.5 * xv * xv);
        dx.data[i] = static_cast<T>((cdf + xv * pdf) * static_cast<double>(dy.data[i]));
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Embedding lookup
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<std::int32_t>& ids) {
    if (table.rank() != 2) throw ShapeMismatch("embedding_lookup expects a rank-2 table");
    std::size_t v = table.shape[0], d = table.shape[1];
    Tensor<T> out = Tensor<T>::zeros({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto id = static_cast<std::size_t>(ids[i]);
        if (ids[i] < 0 || id >= v) throw ShapeMismatch("embedding_lookup: id out of range");
        const T* src = table.data.data() + id * d;
        T* dst = out.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
    return out;
}

// Scatter-add of upstream row gradients into the (dense) table gradient.
template <typename T>
void embedding_backward_accum(const std::vector<std::int32_t>& ids, const Tensor<T>& dx,
                              Tensor<T>& dtable) {
    if (dtable.rank() != 2 || dx.rank() != 2 || dx.shape[0] != ids.size() ||
        dx.shape[1] != dtable.shape[1]) {
        throw ShapeMismatch("embedding_backward_accum: shape mismatch");
    }
    std::size_t d = dtable.shape[1];
    for (std::size_t i = 0; i < ids.size(); ++i) {
        T* dst = dtable.data.data() + static_cast<std::size_t>(ids[i]) * d;
        const T* src = dx.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
}

// ---------------------------------------------------------------------------
// Masked mean pool over the token axis
// ---------------------------------------------------------------------------

// Mean of the rows of X[n,d] whose mask bit is true.  At least one bit must
// be set (the CLS position always is).
template <typename T>
Tensor<T> masked_mean_pool(const Tensor<T>& x, const std::vector<bool>& mask) {
    if (x.rank() != 2 || mask.size() != x.shape[0]) {
        throw ShapeMismatch("masked_mean_pool: mask length must match rows");
    }
    std::size_t n = x.shape[0], d = x.shape[1];
    std::size_t real = 0;
    Tensor<T> out = Tensor<T>::zeros({d});
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        ++real;
        const T* row = x.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) out.data[j] += row[j];
    }
    if (real == 0) throw ZeroVector("masked_mean_pool: mask selects no rows");
    T inv = T(1) / static_cast<T>(real);
    for (std::size_t j = 0; j < d; ++j) out.data[j] *= inv;
    return out;
}

template <typename T>
Tensor<T> masked_mean_pool_backward(const std::vector<bool>& mask, std::size_t d,
                                    const Tensor<T>& dy) {
    if (dy.rank() != 1 || dy.shape[0] != d) {
        throw ShapeMismatch("masked_mean_pool_backward: gradient must be rank-1 of width d");
    }
    std::size_t real = 0;
    for (bool b : mask) real += b ? 1 : 0;
    if (real == 0) throw ZeroVector("masked_mean_pool_backward: mask selects no rows");
    Tensor<T> dx = Tensor<T>::zeros({mask.size(), d});
    T inv = T(1) / static_cast<T>(real);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        T* row = dx.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) row[j] = dy.data[j] * inv;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Cosine similarity
// ---------------------------------------------------------------------------

template <typename T>
T cosine_similarity(const Tensor<T>& u, const Tensor<T>& v) {
    if (u.rank() != 1 || v.rank() != 1 || u.shape[0] != v.shape[0]) {
        throw ShapeMismatch("cosine_similarity expects two rank-1 tensors of equal length");
    }
    T dot = T(0), nu = T(0), nv = T(0);
    for (std::size_t i = 0; i < u.data.size(); ++i) {
        dot += u.data[i] * v.data[i];
        nu += u.data[i] * u.data[i];
        nv += v.data[i] * v.data[i];
    }
    if (nu == T(0) || nv == T(0)) {
        throw ZeroVector("cosine_similarity is undefined for a zero vector");
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// Gradients of c = cos(u, v):
//   du = v / (|u||v|) - c * u / |u|^2,  dv symmetric; both scaled by dc.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> cosine_similarity_backward(const Tensor<T>& u,
                                                           const Tensor<T>& v, T dc) {
    if (u.rank() != 1 || v.rank() != 1 || u.shape[0] != v.shape[0]) {
        throw ShapeMismatch("cosine_similarity_backward expects matching rank-1 tensors");
    }
    T dot = T(0), nu2 = T(0), nv2 = T(0);
    for (std::size_t i = 0; i < u.data.size(); ++i) {
        dot += u.data[i] * v.data[i];
        nu2 += u.data[i] * u.data[i];
        nv2 += v.data[i] * v.data[i];
    }
    if (nu2 == T(0) || nv2 == T(0)) {
        throw ZeroVector("cosine_similarity_backward is undefined for a zero vector");
    }
    T nu = std::sqrt(nu2), nv = std::sqrt(nv2);
    T c = dot / (nu * nv);
    Tensor<T> du = Tensor<T>::zeros({u.shape[0]});
    Tensor<T> dv = Tensor<T>::zeros({v.shape[0]});
    T inv_unv = T(1) / (nu * nv);
    for (std::size_t i = 0; i < u.data.size(); ++i) {
        du.data[i] = dc * (v.data[i] * inv_unv - c * u.data[i] / nu2);
        dv.data[i] = dc * (u.data[i] * inv_unv - c * v.data[i] / nv2);
    }
    return {std::move(du), std::move(dv)};
}

}  // namespace castor
