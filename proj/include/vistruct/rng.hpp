#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace vistruct {

/// 64-bit FNV-1a. Used wherever a stable, platform-independent string hash
/// is needed (std::hash is implementation-defined and must not leak into
/// any persisted or seeded value).
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// splitmix64: tiny, well-distributed, fully specified generator. All
/// pipeline randomness flows through this so runs are reproducible
/// bit-for-bit across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, n), unbiased (rejection sampling).
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("next_below: n must be > 0");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t state_;
};

/// Per-item seed derived from the global run seed and a stable item id, so
/// item-level outcomes are independent of processing order.
inline std::uint64_t item_seed(std::uint64_t global_seed, std::string_view item_id) {
    std::uint64_t h = fnv1a64(item_id);
    // mix the two words through one splitmix round
    SplitMix64 mix(global_seed ^ (h + 0x9e3779b97f4a7c15ull));
    return mix.next();
}

/// k distinct indices drawn uniformly from [0, n), order randomized
/// (partial Fisher-Yates).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                           SplitMix64& rng) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

/// One draw from a multinomial over nonnegative weights. Throws if the
/// weights are empty, negative, or sum to zero.
inline std::size_t sample_weighted(std::span<const double> weights, SplitMix64& rng) {
    if (weights.empty()) throw std::invalid_argument("sample_weighted: empty weights");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("sample_weighted: negative weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("sample_weighted: zero total weight");
    const double u = rng.next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;  // u landed on the last boundary via rounding
}

}  // namespace vistruct
