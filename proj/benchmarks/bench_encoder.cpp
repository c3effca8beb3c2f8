// Microbenchmarks for the attention/encoder hot paths.
//
// The sparse-pattern benchmarks sweep the sequence length so the linear
// scaling of the block-sparse pattern (vs. the quadratic all-true pattern)
// is visible directly in the timings.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "castor/attention.hpp"
#include "castor/encoder.hpp"
#include "castor/random.hpp"
#include "castor/tokenizer.hpp"

namespace {

using namespace castor;

EncoderConfig bench_config(std::size_t max_len) {
    EncoderConfig cfg;
    cfg.vocab_size = 512;
    cfg.d_model = 64;
    cfg.num_heads = 2;
    cfg.num_layers = 2;
    cfg.block_size = 8;
    cfg.window_blocks = 3;
    cfg.num_random_blocks = 2;
    cfg.num_global_blocks = 1;
    cfg.max_len = max_len;
    cfg.ffn_multiplier = 4;
    cfg.pattern_seed = 11;
    return cfg;
}

Tensor<float> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Tensor<float> t = Tensor<float>::zeros({rows, cols});
    RandomEngine engine(seed);
    for (float& v : t.data) v = static_cast<float>(engine.uniform_real(-1.0, 1.0));
    return t;
}

AttentionPattern all_true(std::size_t num_blocks) {
    AttentionPattern p;
    p.num_blocks = num_blocks;
    p.allowed.assign(num_blocks * num_blocks, 1);
    return p;
}

void run_attention(benchmark::State& state, bool sparse) {
    const std::size_t seq_len = static_cast<std::size_t>(state.range(0));
    const std::size_t d_head = 32;
    EncoderConfig cfg = bench_config(seq_len);
    const std::size_t num_blocks = seq_len / cfg.block_size;

    AttentionPattern pattern =
        sparse ? build_pattern(cfg, num_blocks) : all_true(num_blocks);
    Tensor<float> q = random_matrix(seq_len, d_head, 1);
    Tensor<float> k = random_matrix(seq_len, d_head, 2);
    Tensor<float> v = random_matrix(seq_len, d_head, 3);
    std::vector<bool> mask(seq_len, true);

    for (auto _ : state) {
        Tensor<float> out = sparse_attention(q, k, v, pattern, mask);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetComplexityN(static_cast<std::int64_t>(seq_len));
}

void BM_SparseAttention(benchmark::State& state) { run_attention(state, true); }
void BM_DenseAttention(benchmark::State& state) { run_attention(state, false); }

BENCHMARK(BM_SparseAttention)->RangeMultiplier(2)->Range(64, 1024)->Complexity();
BENCHMARK(BM_DenseAttention)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_EncoderForward(benchmark::State& state) {
    const std::size_t seq_len = static_cast<std::size_t>(state.range(0));
    EncoderConfig cfg = bench_config(512);
    EncoderParams<float> params = init_encoder<float>(cfg, 7);

    TokenSeq seq;
    RandomEngine engine(17);
    seq.ids.resize(seq_len);
    seq.pad_mask.assign(seq_len, true);
    seq.length_real = seq_len;
    seq.ids[0] = Vocab::kCls;
    for (std::size_t i = 1; i < seq_len; ++i) {
        seq.ids[i] = static_cast<std::int32_t>(3 + engine.bounded(cfg.vocab_size - 3));
    }

    for (auto _ : state) {
        Tensor<float> out = encode(params, cfg, seq);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetComplexityN(static_cast<std::int64_t>(seq_len));
}

BENCHMARK(BM_EncoderForward)->RangeMultiplier(2)->Range(64, 512)->Complexity();

}  // namespace

BENCHMARK_MAIN();
