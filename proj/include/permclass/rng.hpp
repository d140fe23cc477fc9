#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace permclass {

/// Deterministic 64-bit generator (xoshiro256**) with seed-derived substreams.
///
/// All sampling in this library goes through this class so that results are
/// reproducible bit-for-bit from a seed, independently of platform or of how
/// work is split across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = split_mix(x);
    }

    /// Independent substream for item `index` (used by batch experiments:
    /// sample i always draws from stream(i), whatever the thread layout).
    Rng stream(std::uint64_t index) const {
        Rng r(0);
        std::uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        for (auto& w : r.state_) w = split_mix(x);
        return r;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform integer in [0, n), n >= 1. Unbiased (rejection on the top range).
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1] (safe as argument of log).
    double uniform_positive() { return 1.0 - uniform_real(); }

    bool bernoulli(double p) { return uniform_real() < p; }

    double exponential() { return -std::log(uniform_positive()); }

    /// Index sampled proportionally to `weights` (non-negative, not all zero).
    std::size_t discrete(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform_real() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;
    }

    /// Sorted uniform k-subset of {0, ..., n-1}.
    std::vector<std::size_t> uniform_subset(std::size_t n, std::size_t k) {
        // Floyd's algorithm, then sort.
        std::vector<std::size_t> chosen;
        chosen.reserve(k);
        for (std::size_t j = n - k; j < n; ++j) {
            std::size_t t = uniform_index(j + 1);
            bool seen = false;
            for (std::size_t c : chosen)
                if (c == t) { seen = true; break; }
            chosen.push_back(seen ? j : t);
        }
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

private:
    static std::uint64_t split_mix(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace permclass
