#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace tsprl {

/// splitmix64 finalizer; used to derive well-separated stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a named substream of a master seed. Solver components each get
/// their own stream so results stay reproducible when one component changes
/// how much randomness it consumes.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

/// Deterministic random source. Wraps std::mt19937_64 (bit-exact across
/// platforms) and maps raw draws to doubles/ints itself, since the standard
/// distributions are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::size_t next_below(std::size_t bound) {
        // modulo bias is < 2^-40 for desk-scale bounds
        return static_cast<std::size_t>(next_u64() % bound);
    }

  private:
    std::mt19937_64 gen_;
};

/// k distinct indices drawn uniformly from {0,...,n-1} (partial Fisher-Yates).
inline std::vector<int> sample_indices(int n, int k, Rng& rng) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i)
        pool[i] = i;
    if (k > n)
        k = n;
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.next_below(static_cast<std::size_t>(n - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

} // namespace tsprl
