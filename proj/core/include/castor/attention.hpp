#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "castor/ops.hpp"
#include "castor/tensor.hpp"

namespace castor {

struct SeqTooLong : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Architecture hyperparameters for the block-sparse encoder.
struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t d_model = 64;
    std::size_t num_heads = 2;
    std::size_t num_layers = 2;
    std::size_t block_size = 8;
    std::size_t window_blocks = 3;      // odd: self block ± (window_blocks-1)/2
    std::size_t num_random_blocks = 2;  // extra blocks per non-global row
    std::size_t num_global_blocks = 1;  // leading blocks that see everything
    std::size_t max_len = 512;          // token cap, multiple of block_size
    std::size_t ffn_multiplier = 4;
    std::uint64_t pattern_seed = 0;

    void validate() const;  // throws std::invalid_argument
};

// Block-level attention mask: allowed(i, j) says query block i may attend to
// key block j.  Combines the self/sliding-window band, fully-connected
// global blocks, and a seeded set of random blocks per row, so the number of
// true cells per row is bounded by a constant and the total grows linearly
// with the number of blocks.
struct AttentionPattern {
    std::size_t num_blocks = 0;
    std::vector<std::uint8_t> allowed;  // row-major num_blocks x num_blocks

    bool at(std::size_t i, std::size_t j) const { return allowed[i * num_blocks + j] != 0; }
    void set(std::size_t i, std::size_t j) { allowed[i * num_blocks + j] = 1; }

    std::size_t total_true() const {
        std::size_t n = 0;
        for (std::uint8_t v : allowed) n += v;
        return n;
    }
};

// Deterministic pattern construction; depends only on (cfg, num_blocks).
AttentionPattern build_pattern(const EncoderConfig& cfg, std::size_t num_blocks);

// Leading num_blocks x num_blocks corner of a larger pattern.  The encoder
// runs every sequence through the restriction of the max-length pattern so
// that appending padding blocks never changes which real blocks may interact
// (pad invariance).
AttentionPattern restrict_pattern(const AttentionPattern& full, std::size_t num_blocks);

// Per-query-block softmax probabilities kept for the backward pass.
template <typename T>
struct SparseAttentionCache {
    std::vector<std::vector<std::size_t>> key_blocks;  // allowed blocks, ascending
    std::vector<Tensor<T>> probs;                      // [block_size, |key_blocks|*block_size]
};

template <typename T>
struct SparseAttentionGrads {
    Tensor<T> dq, dk, dv;
};

// Scaled dot-product attention for one head, restricted to the block
// pattern.  Q, K, V are [n, head_dim] with n a multiple of the block count;
// scores of disallowed block pairs and padded keys never enter the softmax,
// and rows whose query is a pad position come out all-zero.
template <typename T>
Tensor<T> sparse_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                           const AttentionPattern& pattern, const std::vector<bool>& pad_mask,
                           SparseAttentionCache<T>* cache = nullptr);

template <typename T>
SparseAttentionGrads<T> sparse_attention_backward(const Tensor<T>& q, const Tensor<T>& k,
                                                  const Tensor<T>& v,
                                                  const AttentionPattern& pattern,
                                                  const std::vector<bool>& pad_mask,
                                                  const SparseAttentionCache<T>& cache,
                                                  const Tensor<T>& dout);

// ---------------------------------------------------------------------------
// Implementation (templates)
// ---------------------------------------------------------------------------

namespace detail {

// Copy the rows of the allowed key blocks into one contiguous [nkb*bs, dh]
// matrix so the per-block math is two small dense matmuls.
template <typename T>
Tensor<T> gather_blocks(const Tensor<T>& m, const std::vector<std::size_t>& blocks,
                        std::size_t block_size) {
    std::size_t dh = m.shape[1];
    Tensor<T> out = Tensor<T>::zeros({blocks.size() * block_size, dh});
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const T* src = m.data.data() + blocks[b] * block_size * dh;
        T* dst = out.data.data() + b * block_size * dh;
        for (std::size_t i = 0; i < block_size * dh; ++i) dst[i] = src[i];
    }
    return out;
}

template <typename T>
void scatter_add_blocks(const Tensor<T>& part, const std::vector<std::size_t>& blocks,
                        std::size_t block_size, Tensor<T>& full) {
    std::size_t dh = full.shape[1];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const T* src = part.data.data() + b * block_size * dh;
        T* dst = full.data.data() + blocks[b] * block_size * dh;
        for (std::size_t i = 0; i < block_size * dh; ++i) dst[i] += src[i];
    }
}

inline std::vector<std::size_t> allowed_blocks_of_row(const AttentionPattern& pattern,
                                                      std::size_t qb) {
    std::vector<std::size_t> blocks;
    for (std::size_t j = 0; j < pattern.num_blocks; ++j) {
        if (pattern.at(qb, j)) blocks.push_back(j);
    }
    return blocks;
}

}  // namespace detail

template <typename T>
Tensor<T> sparse_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                           const AttentionPattern& pattern, const std::vector<bool>& pad_mask,
                           SparseAttentionCache<T>* cache) {
    if (q.rank() != 2 || !q.same_shape(k) || !q.same_shape(v)) {
        throw ShapeMismatch("sparse_attention: Q, K, V must share a rank-2 shape");
    }
    const std::size_t n = q.shape[0];
    const std::size_t dh = q.shape[1];
    if (pattern.num_blocks == 0 || n % pattern.num_blocks != 0) {
        throw ShapeMismatch("sparse_attention: sequence length is not divisible into blocks");
    }
    if (pad_mask.size() != n) {
        throw ShapeMismatch("sparse_attention: pad mask length mismatch");
    }
    const std::size_t bs = n / pattern.num_blocks;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    const T neg_inf = -std::numeric_limits<T>::infinity();

    Tensor<T> out = Tensor<T>::zeros({n, dh});
    if (cache) {
        cache->key_blocks.assign(pattern.num_blocks, {});
        cache->probs.assign(pattern.num_blocks, Tensor<T>());
    }

    for (std::size_t qb = 0; qb < pattern.num_blocks; ++qb) {
        std::vector<std::size_t> kbs = detail::allowed_blocks_of_row(pattern, qb);
        Tensor<T> kcat = detail::gather_blocks(k, kbs, bs);
        Tensor<T> vcat = detail::gather_blocks(v, kbs, bs);
        const std::size_t ncols = kcat.shape[0];

        // scores = Q_block * Kcat^T / sqrt(dh)
        Tensor<T> qblk = Tensor<T>::zeros({bs, dh});
        for (std::size_t i = 0; i < bs * dh; ++i) {
            qblk.data[i] = q.data[qb * bs * dh + i];
        }
        Tensor<T> scores = matmul(qblk, transpose(kcat));
        for (T& s : scores.data) s *= scale;

        // Mask padded keys, then per-row masked softmax.
        for (std::size_t c = 0; c < ncols; ++c) {
            std::size_t key_index = kbs[c / bs] * bs + (c % bs);
            if (!pad_mask[key_index]) {
                for (std::size_t r = 0; r < bs; ++r) scores.data[r * ncols + c] = neg_inf;
            }
        }
        Tensor<T> probs = Tensor<T>::zeros({bs, ncols});
        for (std::size_t r = 0; r < bs; ++r) {
            if (!pad_mask[qb * bs + r]) continue;  // pad query row stays zero
            const T* srow = scores.data.data() + r * ncols;
            T* prow = probs.data.data() + r * ncols;
            T max_val = neg_inf;
            for (std::size_t c = 0; c < ncols; ++c) max_val = std::max(max_val, srow[c]);
            T sum = T(0);
            for (std::size_t c = 0; c < ncols; ++c) {
                T e = srow[c] == neg_inf ? T(0) : std::exp(srow[c] - max_val);
                prow[c] = e;
                sum += e;
            }
            T inv = T(1) / sum;
            for (std::size_t c = 0; c < ncols; ++c) prow[c] *= inv;
        }

        Tensor<T> oblk = matmul(probs, vcat);
        for (std::size_t i = 0; i < bs * dh; ++i) {
            out.data[qb * bs * dh + i] = oblk.data[i];
        }
        if (cache) {
            cache->key_blocks[qb] = std::move(kbs);
            cache->probs[qb] = std::move(probs);
        }
    }
    return out;
}

template <typename T>
SparseAttentionGrads<T> sparse_attention_backward(const Tensor<T>& q, const Tensor<T>& k,
                                                  const Tensor<T>& v,
                                                  const AttentionPattern& pattern,
                                                  const std::vector<bool>& pad_mask,
                                                  const SparseAttentionCache<T>& cache,
                                                  const Tensor<T>& dout) {
    require_same_shape(q, dout, "sparse_attention_backward");
    const std::size_t n = q.shape[0];
    const std::size_t dh = q.shape[1];
    const std::size_t bs = n / pattern.num_blocks;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    SparseAttentionGrads<T> g{Tensor<T>::zeros({n, dh}), Tensor<T>::zeros({n, dh}),
                              Tensor<T>::zeros({n, dh})};
    (void)pad_mask;  // masking is already baked into the cached probabilities

    for (std::size_t qb = 0; qb < pattern.num_blocks; ++qb) {
        const std::vector<std::size_t>& kbs = cache.key_blocks[qb];
        const Tensor<T>& probs = cache.probs[qb];
        const std::size_t ncols = probs.shape[1];

        Tensor<T> kcat = detail::gather_blocks(k, kbs, bs);
        Tensor<T> vcat = detail::gather_blocks(v, kbs, bs);

        Tensor<T> doblk = Tensor<T>::zeros({bs, dh});
        for (std::size_t i = 0; i < bs * dh; ++i) {
            doblk.data[i] = dout.data[qb * bs * dh + i];
        }
        Tensor<T> qblk = Tensor<T>::zeros({bs, dh});
        for (std::size_t i = 0; i < bs * dh; ++i) {
            qblk.data[i] = q.data[qb * bs * dh + i];
        }

        // dV_part = P^T * dO ; dP = dO * V^T
        Tensor<T> dvcat = matmul(transpose(probs), doblk);
        Tensor<T> dprobs = matmul(doblk, transpose(vcat));

        // Softmax backward per row; masked cells have P = 0, so their slots
        // vanish on their own (including whole pad-query rows).
        Tensor<T> dscores = softmax_rows_backward(probs, dprobs);
        for (T& s : dscores.data) s *= scale;

        Tensor<T> dqblk = matmul(dscores, kcat);
        Tensor<T> dkcat = matmul(transpose(dscores), qblk);

        for (std::size_t i = 0; i < bs * dh; ++i) {
            g.dq.data[qb * bs * dh + i] += dqblk.data[i];
        }
        detail::scatter_add_blocks(dkcat, kbs, bs, g.dk);
        detail::scatter_add_blocks(dvcat, kbs, bs, g.dv);

        (void)ncols;
    }
    return g;
}

}  // namespace castor
