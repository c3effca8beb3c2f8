#pragma once

// Shared-weight text encoder: embedding lookup, pre-norm transformer blocks
// with block-sparse attention, and a masked mean-pool to one vector per
// text.  Forward passes optionally record the activations needed by the
// hand-written backward pass.

#include <cstdint>
#include <string>
#include <vector>

#include "castor/attention.hpp"
#include "castor/ops.hpp"
#include "castor/optimizer.hpp"
#include "castor/tensor.hpp"
#include "castor/tokenizer.hpp"

namespace castor {

template <typename T>
struct EncoderLayerParams {
    Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;        // attention projections
    Tensor<T> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
    Tensor<T> w1, b1, w2, b2;                        // feed-forward
};

template <typename T>
struct EncoderParams {
    Tensor<T> embedding;  // [vocab_size, d_model]
    std::vector<EncoderLayerParams<T>> layers;

    // Flat views in a fixed order shared by the optimizer, the gradient
    // container, and the checkpoint manifest.
    std::vector<Tensor<T>*> tensor_list();
    std::vector<const Tensor<T>*> tensor_list() const;
    static std::vector<std::string> tensor_names(std::size_t num_layers);
};

// Deterministic initialization: weights uniform-scaled, biases zero, layer
// norm at identity.  Each tensor gets its own stream derived from seed.
template <typename T>
EncoderParams<T> init_encoder(const EncoderConfig& cfg, std::uint64_t seed);

// Zero-filled gradient container with the same structure as the parameters.
template <typename T>
EncoderParams<T> zero_like(const EncoderParams<T>& params);

template <typename T>
struct EncoderLayerCache {
    Tensor<T> x_in;            // layer input
    LayerNormResult<T> ln1;
    Tensor<T> q, k, v;         // post-projection, all heads packed
    std::vector<SparseAttentionCache<T>> heads;
    Tensor<T> attn_concat;     // concatenated head outputs, pre-W_o
    Tensor<T> x_mid;           // after the attention residual
    LayerNormResult<T> ln2;
    Tensor<T> h1;              // FFN pre-activation
    Tensor<T> a1;              // FFN post-GELU
};

template <typename T>
struct EncoderCache {
    AttentionPattern pattern;  // restriction used for this sequence
    std::vector<EncoderLayerCache<T>> layers;
    Tensor<T> x_final;         // input to the mean pool
};

// Forward pass to one embedding vector of length d_model.  When `cache` is
// given, every intermediate needed by encode_backward is recorded.
//
// The attention pattern is the leading corner of build_pattern(cfg,
// max_len/block_size): computing it at full length and restricting makes the
// block graph of the real tokens independent of how much padding follows,
// which is what makes padding provably inert.
template <typename T>
Tensor<T> encode(const EncoderParams<T>& params, const EncoderConfig& cfg, const TokenSeq& seq,
                 EncoderCache<T>* cache = nullptr);

// Gradients of a scalar objective with respect to every parameter, given the
// gradient at the pooled output.  Accumulates into `grads` (zero it first
// for a fresh batch).
template <typename T>
void encode_backward(const EncoderParams<T>& params, const EncoderConfig& cfg,
                     const TokenSeq& seq, const EncoderCache<T>& cache,
                     const Tensor<T>& d_pooled, EncoderParams<T>& grads);

// ---------------------------------------------------------------------------
// Implementation
// ---------------------------------------------------------------------------

template <typename T>
std::vector<Tensor<T>*> EncoderParams<T>::tensor_list() {
    std::vector<Tensor<T>*> out{&embedding};
    for (EncoderLayerParams<T>& l : layers) {
        for (Tensor<T>* t : {&l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo,
                             &l.ln1_gamma, &l.ln1_beta, &l.ln2_gamma, &l.ln2_beta, &l.w1,
                             &l.b1, &l.w2, &l.b2}) {
            out.push_back(t);
        }
    }
    return out;
}

template <typename T>
std::vector<const Tensor<T>*> EncoderParams<T>::tensor_list() const {
    auto mutable_list = const_cast<EncoderParams<T>*>(this)->tensor_list();
    return {mutable_list.begin(), mutable_list.end()};
}

template <typename T>
std::vector<std::string> EncoderParams<T>::tensor_names(std::size_t num_layers) {
    std::vector<std::string> names{"embedding"};
    static constexpr const char* kLayerFields[] = {
        "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
        "ln1_gamma", "ln1_beta", "ln2_gamma", "ln2_beta", "w1", "b1", "w2", "b2"};
    for (std::size_t l = 0; l < num_layers; ++l) {
        for (const char* field : kLayerFields) {
            names.push_back("layers." + std::to_string(l) + "." + field);
        }
    }
    return names;
}

template <typename T>
EncoderParams<T> init_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t d = cfg.d_model;
    const std::size_t h = d * cfg.ffn_multiplier;

    std::uint64_t stream = 0;
    auto uniform = [&](std::vector<std::size_t> shape) {
        return seeded_init<T>(std::move(shape), InitScheme::UniformScaled, seed + stream++);
    };

    EncoderParams<T> p;
    p.embedding = uniform({cfg.vocab_size, d});
    p.layers.resize(cfg.num_layers);
    for (EncoderLayerParams<T>& l : p.layers) {
        l.wq = uniform({d, d});
        l.bq = Tensor<T>::zeros({d});
        l.wk = uniform({d, d});
        l.bk = Tensor<T>::zeros({d});
        l.wv = uniform({d, d});
        l.bv = Tensor<T>::zeros({d});
        l.wo = uniform({d, d});
        l.bo = Tensor<T>::zeros({d});
        l.ln1_gamma = Tensor<T>::full({d}, T(1));
        l.ln1_beta = Tensor<T>::zeros({d});
        l.ln2_gamma = Tensor<T>::full({d}, T(1));
        l.ln2_beta = Tensor<T>::zeros({d});
        l.w1 = uniform({d, h});
        l.b1 = Tensor<T>::zeros({h});
        l.w2 = uniform({h, d});
        l.b2 = Tensor<T>::zeros({d});
    }
    return p;
}

template <typename T>
EncoderParams<T> zero_like(const EncoderParams<T>& params) {
    EncoderParams<T> z;
    z.embedding = Tensor<T>::zeros(params.embedding.shape);
    z.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const EncoderLayerParams<T>& src = params.layers[l];
        EncoderLayerParams<T>& dst = z.layers[l];
        dst.wq = Tensor<T>::zeros(src.wq.shape);
        dst.bq = Tensor<T>::zeros(src.bq.shape);
        dst.wk = Tensor<T>::zeros(src.wk.shape);
        dst.bk = Tensor<T>::zeros(src.bk.shape);
        dst.wv = Tensor<T>::zeros(src.wv.shape);
        dst.bv = Tensor<T>::zeros(src.bv.shape);
        dst.wo = Tensor<T>::zeros(src.wo.shape);
        dst.bo = Tensor<T>::zeros(src.bo.shape);
        dst.ln1_gamma = Tensor<T>::zeros(src.ln1_gamma.shape);
        dst.ln1_beta = Tensor<T>::zeros(src.ln1_beta.shape);
        dst.ln2_gamma = Tensor<T>::zeros(src.ln2_gamma.shape);
        dst.ln2_beta = Tensor<T>::zeros(src.ln2_beta.shape);
        dst.w1 = Tensor<T>::zeros(src.w1.shape);
        dst.b1 = Tensor<T>::zeros(src.b1.shape);
        dst.w2 = Tensor<T>::zeros(src.w2.shape);
        dst.b2 = Tensor<T>::zeros(src.b2.shape);
    }
    return z;
}

namespace detail {

// Columns [h*dh, (h+1)*dh) of a packed [n, d_model] tensor.
template <typename T>
Tensor<T> take_head(const Tensor<T>& packed, std::size_t head, std::size_t dh) {
    std::size_t n = packed.shape[0], d = packed.shape[1];
    Tensor<T> out = Tensor<T>::zeros({n, dh});
    for (std::size_t i = 0; i < n; ++i) {
        const T* src = packed.data.data() + i * d + head * dh;
        T* dst = out.data.data() + i * dh;
        for (std::size_t j = 0; j < dh; ++j) dst[j] = src[j];
    }
    return out;
}

template <typename T>
void put_head(const Tensor<T>& head_tensor, std::size_t head, std::size_t dh,
              Tensor<T>& packed) {
    std::size_t n = packed.shape[0], d = packed.shape[1];
    for (std::size_t i = 0; i < n; ++i) {
        const T* src = head_tensor.data.data() + i * dh;
        T* dst = packed.data.data() + i * d + head * dh;
        for (std::size_t j = 0; j < dh; ++j) dst[j] = src[j];
    }
}

template <typename T>
void add_head(const Tensor<T>& head_tensor, std::size_t head, std::size_t dh,
              Tensor<T>& packed) {
    std::size_t n = packed.shape[0], d = packed.shape[1];
    for (std::size_t i = 0; i < n; ++i) {
        const T* src = head_tensor.data.data() + i * dh;
        T* dst = packed.data.data() + i * d + head * dh;
        for (std::size_t j = 0; j < dh; ++j) dst[j] += src[j];
    }
}

}  // namespace detail

template <typename T>
Tensor<T> encode(const EncoderParams<T>& params, const EncoderConfig& cfg, const TokenSeq& seq,
                 EncoderCache<T>* cache) {
    if (seq.ids.size() > cfg.max_len) {
        throw SeqTooLong("sequence of " + std::to_string(seq.ids.size()) +
                         " tokens exceeds max_len " + std::to_string(cfg.max_len));
    }
    if (seq.ids.empty() || seq.ids.size() % cfg.block_size != 0) {
        throw ShapeMismatch("encode: sequence length must be a nonzero multiple of block_size");
    }
    const std::size_t n = seq.ids.size();
    const std::size_t d = cfg.d_model;
    const std::size_t dh = d / cfg.num_heads;

    AttentionPattern pattern = restrict_pattern(
        build_pattern(cfg, cfg.max_len / cfg.block_size), n / cfg.block_size);

    EncoderCache<T> local;
    EncoderCache<T>& c = cache ? *cache : local;
    c.layers.clear();
    c.layers.resize(cfg.num_layers);
    c.pattern = std::move(pattern);

    Tensor<T> x = embedding_lookup(params.embedding, seq.ids);

    for (std::size_t li = 0; li < cfg.num_layers; ++li) {
        const EncoderLayerParams<T>& l = params.layers[li];
        EncoderLayerCache<T>& lc = c.layers[li];
        lc.x_in = x;

        // Pre-norm attention block.
        lc.ln1 = layer_norm(x, l.ln1_gamma, l.ln1_beta);
        lc.q = add_bias(matmul(lc.ln1.y, l.wq), l.bq);
        lc.k = add_bias(matmul(lc.ln1.y, l.wk), l.bk);
        lc.v = add_bias(matmul(lc.ln1.y, l.wv), l.bv);

        lc.heads.resize(cfg.num_heads);
        lc.attn_concat = Tensor<T>::zeros({n, d});
        for (std::size_t h = 0; h < cfg.num_heads; ++h) {
            Tensor<T> qh = detail::take_head(lc.q, h, dh);
            Tensor<T> kh = detail::take_head(lc.k, h, dh);
            Tensor<T> vh = detail::take_head(lc.v, h, dh);
            Tensor<T> oh = sparse_attention(qh, kh, vh, c.pattern, seq.pad_mask, &lc.heads[h]);
            detail::put_head(oh, h, dh, lc.attn_concat);
        }
        Tensor<T> attn_out = add_bias(matmul(lc.attn_concat, l.wo), l.bo);
        lc.x_mid = add(x, attn_out);

        // Pre-norm feed-forward block.
        lc.ln2 = layer_norm(lc.x_mid, l.ln2_gamma, l.ln2_beta);
        lc.h1 = add_bias(matmul(lc.ln2.y, l.w1), l.b1);
        lc.a1 = gelu(lc.h1);
        Tensor<T> ffn_out = add_bias(matmul(lc.a1, l.w2), l.b2);
        x = add(lc.x_mid, ffn_out);
    }

    c.x_final = x;
    return masked_mean_pool(x, seq.pad_mask);
}

template <typename T>
void encode_backward(const EncoderParams<T>& params, const EncoderConfig& cfg,
                     const TokenSeq& seq, const EncoderCache<T>& cache,
                     const Tensor<T>& d_pooled, EncoderParams<T>& grads) {
    const std::size_t d = cfg.d_model;
    const std::size_t dh = d / cfg.num_heads;

    Tensor<T> dx = masked_mean_pool_backward(seq.pad_mask, d, d_pooled);

    for (std::size_t li = cfg.num_layers; li-- > 0;) {
        const EncoderLayerParams<T>& l = params.layers[li];
        const EncoderLayerCache<T>& lc = cache.layers[li];
        EncoderLayerParams<T>& gl = grads.layers[li];

        // Feed-forward block: x_out = x_mid + W2(gelu(W1 ln2(x_mid) + b1)) + b2
        const Tensor<T>& d_xout = dx;
        Tensor<T> d_ffn = d_xout;  // residual branch
        gl.b2 = add(gl.b2, add_bias_backward(d_ffn));
        auto [d_a1, d_w2] = matmul_backward(lc.a1, l.w2, d_ffn);
        gl.w2 = add(gl.w2, d_w2);
        Tensor<T> d_h1 = gelu_backward(lc.h1, d_a1);
        gl.b1 = add(gl.b1, add_bias_backward(d_h1));
        auto [d_y2, d_w1] = matmul_backward(lc.ln2.y, l.w1, d_h1);
        gl.w1 = add(gl.w1, d_w1);
        LayerNormGrads<T> ln2g = layer_norm_backward(lc.ln2, l.ln2_gamma, d_y2);
        gl.ln2_gamma = add(gl.ln2_gamma, ln2g.dgamma);
        gl.ln2_beta = add(gl.ln2_beta, ln2g.dbeta);
        Tensor<T> d_xmid = add(d_xout, ln2g.dx);

        // Attention block: x_mid = x_in + Wo(attn(ln1(x_in))) + bo
        gl.bo = add(gl.bo, add_bias_backward(d_xmid));
        auto [d_concat, d_wo] = matmul_backward(lc.attn_concat, l.wo, d_xmid);
        gl.wo = add(gl.wo, d_wo);

        Tensor<T> d_q = Tensor<T>::zeros({lc.q.shape[0], d});
        Tensor<T> d_k = Tensor<T>::zeros({lc.k.shape[0], d});
        Tensor<T> d_v = Tensor<T>::zeros({lc.v.shape[0], d});
        for (std::size_t h = 0; h < cfg.num_heads; ++h) {
            Tensor<T> qh = detail::take_head(lc.q, h, dh);
            Tensor<T> kh = detail::take_head(lc.k, h, dh);
            Tensor<T> vh = detail::take_head(lc.v, h, dh);
            Tensor<T> d_oh = detail::take_head(d_concat, h, dh);
            SparseAttentionGrads<T> hg = sparse_attention_backward(
                qh, kh, vh, cache.pattern, seq.pad_mask, lc.heads[h], d_oh);
            detail::add_head(hg.dq, h, dh, d_q);
            detail::add_head(hg.dk, h, dh, d_k);
            detail::add_head(hg.dv, h, dh, d_v);
        }

        gl.bq = add(gl.bq, add_bias_backward(d_q));
        auto [d_y1q, d_wq] = matmul_backward(lc.ln1.y, l.wq, d_q);
        gl.wq = add(gl.wq, d_wq);
        gl.bk = add(gl.bk, add_bias_backward(d_k));
        auto [d_y1k, d_wk] = matmul_backward(lc.ln1.y, l.wk, d_k);
        gl.wk = add(gl.wk, d_wk);
        gl.bv = add(gl.bv, add_bias_backward(d_v));
        auto [d_y1v, d_wv] = matmul_backward(lc.ln1.y, l.wv, d_v);
        gl.wv = add(gl.wv, d_wv);

        Tensor<T> d_y1 = add(add(d_y1q, d_y1k), d_y1v);
        LayerNormGrads<T> ln1g = layer_norm_backward(lc.ln1, l.ln1_gamma, d_y1);
        gl.ln1_gamma = add(gl.ln1_gamma, ln1g.dgamma);
        gl.ln1_beta = add(gl.ln1_beta, ln1g.dbeta);

        dx = add(d_xmid, ln1g.dx);
    }

    embedding_backward_accum(seq.ids, dx, grads.embedding);
}

}  // namespace castor
