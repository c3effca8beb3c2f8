#include "castor/attention.hpp"

#include <algorithm>
#include <stdexcept>

#include "castor/random.hpp"

namespace castor {

void EncoderConfig::validate() const {
    if (vocab_size < 4) throw std::invalid_argument("vocab_size must cover the reserved tokens");
    if (d_model == 0 || num_heads == 0 || d_model % num_heads != 0) {
        throw std::invalid_argument("d_model must be a positive multiple of num_heads");
    }
    if (num_layers == 0) throw std::invalid_argument("num_layers must be >= 1");
    if (block_size == 0) throw std::invalid_argument("block_size must be >= 1");
    if (window_blocks < 1 || window_blocks % 2 == 0) {
        throw std::invalid_argument("window_blocks must be odd and >= 1");
    }
    if (num_global_blocks < 1) throw std::invalid_argument("num_global_blocks must be >= 1");
    if (max_len == 0 || max_len % block_size != 0) {
        throw std::invalid_argument("max_len must be a positive multiple of block_size");
    }
    if (ffn_multiplier == 0) throw std::invalid_argument("ffn_multiplier must be >= 1");
}

AttentionPattern build_pattern(const EncoderConfig& cfg, std::size_t num_blocks) {
    if (num_blocks < 1) throw std::invalid_argument("build_pattern: num_blocks must be >= 1");

    AttentionPattern pattern;
    pattern.num_blocks = num_blocks;
    pattern.allowed.assign(num_blocks * num_blocks, 0);

    // Self block and sliding window.
    const std::size_t half = (cfg.window_blocks - 1) / 2;
    for (std::size_t i = 0; i < num_blocks; ++i) {
        std::size_t lo = i > half ? i - half : 0;
        std::size_t hi = std::min(num_blocks - 1, i + half);
        for (std::size_t j = lo; j <= hi; ++j) pattern.set(i, j);
    }

    // Global blocks: full rows and full columns.
    const std::size_t g = std::min(cfg.num_global_blocks, num_blocks);
    for (std::size_t gg = 0; gg < g; ++gg) {
        for (std::size_t j = 0; j < num_blocks; ++j) {
            pattern.set(gg, j);
            pattern.set(j, gg);
        }
    }

    // Exactly num_random_blocks extra entries per non-global row, drawn
    // seeded-uniformly from the still-disallowed blocks of that row (all of
    // them if fewer remain).  Rows are visited in order with one engine, so
    // the pattern is a pure function of (cfg, num_blocks).
    RandomEngine engine(cfg.pattern_seed);
    for (std::size_t i = g; i < num_blocks; ++i) {
        std::vector<std::size_t> candidates;
        for (std::size_t j = 0; j < num_blocks; ++j) {
            if (!pattern.at(i, j)) candidates.push_back(j);
        }
        std::size_t k = std::min(cfg.num_random_blocks, candidates.size());
        for (std::size_t pick : engine.sample_indices(candidates.size(), k)) {
            pattern.set(i, candidates[pick]);
        }
    }
    return pattern;
}

AttentionPattern restrict_pattern(const AttentionPattern& full, std::size_t num_blocks) {
    if (num_blocks > full.num_blocks) {
        throw std::invalid_argument("restrict_pattern: cannot grow a pattern");
    }
    AttentionPattern out;
    out.num_blocks = num_blocks;
    out.allowed.assign(num_blocks * num_blocks, 0);
    for (std::size_t i = 0; i < num_blocks; ++i) {
        for (std::size_t j = 0; j < num_blocks; ++j) {
            out.allowed[i * num_blocks + j] = full.allowed[i * full.num_blocks + j];
        }
    }
    return out;
}

}  // namespace castor
