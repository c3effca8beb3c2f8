#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace castor {

// Deterministic random source shared by every component that needs one.
//
// std::mt19937_64 itself is fully specified by the standard, but the
// distributions on top of it (uniform_int_distribution, shuffle, ...) are
// implementation-defined, so identical seeds can produce different streams
// on different standard libraries.  This wrapper pins the full algorithm:
// bounded draws use Lemire's multiply-shift reduction and shuffling is a
// hand-rolled Fisher-Yates, so a given seed yields the same sequence
// everywhere.
class RandomEngine {
public:
    explicit RandomEngine(std::uint64_t seed) : rng_(seed) {}

    std::uint64_t next_u64() { return rng_(); }

    // Uniform draw from [0, n).  n must be nonzero.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(rng_()) * n) >> 64);
    }

    // Uniform draw from [lo, hi], inclusive on both ends.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(
                        bounded(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform_real() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [lo, hi).
    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform_real();
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // k distinct indices drawn uniformly from [0, n), in draw order.
    // Partial Fisher-Yates over an index vector; O(n) space, O(k) swaps.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::mt19937_64 rng_;
};

inline std::vector<std::size_t> RandomEngine::sample_indices(std::size_t n,
                                                             std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace castor
