#pragma once

/// Exact TSP oracles: exhaustive enumeration and Held-Karp dynamic
/// programming. Desk-scale only; both are reference solvers for tests and
/// gap reporting, not part of the learning loop.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tsprl/errors.hpp"
#include "tsprl/tsp.hpp"

namespace tsprl {

struct ExactResult {
    Tour tour;
    double length = 0.0;
};

/// Optimal tour by enumerating the (n-1)!/2 distinct cyclic tours.
/// Guarded at n <= 10.
inline ExactResult brute_force(const TspInstance& instance) {
    const int n = instance.n();
    if (n > 10)
        throw SizeLimitError("brute_force limited to n <= 10, got " + std::to_string(n));
    const DistanceMatrix dm(instance);

    std::vector<int> rest;
    for (int i = 1; i < n; ++i)
        rest.push_back(i);

    Tour best;
    double best_len = std::numeric_limits<double>::infinity();
    std::vector<int> perm(static_cast<std::size_t>(n));
    perm[0] = 0;
    do {
        // skip the reversal twin of each cyclic tour
        if (rest.front() > rest.back())
            continue;
        std::copy(rest.begin(), rest.end(), perm.begin() + 1);
        const Tour candidate(perm);
        const double len = tour_length(dm, candidate);
        if (len < best_len) {
            best_len = len;
            best = candidate;
        }
    } while (std::next_permutation(rest.begin(), rest.end()));

    return {best, best_len};
}

/// Optimal tour via the O(n^2 2^n) Held-Karp dynamic program.
/// Guarded at n <= 20 (about 90 MB of DP state at the limit).
inline ExactResult held_karp(const TspInstance& instance) {
    const int n = instance.n();
    if (n > 20)
        throw SizeLimitError("held_karp limited to n <= 20, got " + std::to_string(n));
    const DistanceMatrix dm(instance);

    // dp[mask][j]: shortest path from city 0 visiting exactly {mask} over
    // cities 1..n-1 and ending at city j+1.
    const int m = n - 1;
    const std::size_t full = std::size_t{1} << m;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dp(full * static_cast<std::size_t>(m), inf);
    std::vector<std::int8_t> parent(full * static_cast<std::size_t>(m), -1);
    const auto at = [m](std::size_t mask, int j) {
        return mask * static_cast<std::size_t>(m) + static_cast<std::size_t>(j);
    };

    for (int j = 0; j < m; ++j)
        dp[at(std::size_t{1} << j, j)] = dm(0, j + 1);

    for (std::size_t mask = 1; mask < full; ++mask) {
        for (int j = 0; j < m; ++j) {
            if (!((mask >> j) & 1))
                continue;
            const double cur = dp[at(mask, j)];
            if (cur == inf)
                continue;
            std::size_t rest = ~mask & (full - 1);
            while (rest != 0) {
                const std::size_t bit = rest & (~rest + 1);
                const int k = std::countr_zero(bit);
                const double cand = cur + dm(j + 1, k + 1);
                if (cand < dp[at(mask | bit, k)]) {
                    dp[at(mask | bit, k)] = cand;
                    parent[at(mask | bit, k)] = static_cast<std::int8_t>(j);
                }
                rest ^= bit;
            }
        }
    }

    double best_len = inf;
    int best_end = -1;
    for (int j = 0; j < m; ++j) {
        const double cand = dp[at(full - 1, j)] + dm(j + 1, 0);
        if (cand < best_len) {
            best_len = cand;
            best_end = j;
        }
    }

    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(n));
    std::size_t mask = full - 1;
    int j = best_end;
    while (j >= 0) {
        perm.push_back(j + 1);
        const int p = parent[at(mask, j)];
        mask ^= std::size_t{1} << j;
        j = p;
    }
    perm.push_back(0);
    std::reverse(perm.begin(), perm.end());

    return {Tour(perm), best_len};
}

} // namespace tsprl
