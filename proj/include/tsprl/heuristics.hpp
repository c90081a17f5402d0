#pragma once

/// Classic construction and improvement heuristics: nearest neighbor (used
/// to seed the transition matrix) and 2-opt (benchmark baseline).

#include <string>
#include <vector>

#include "tsprl/errors.hpp"
#include "tsprl/tsp.hpp"

namespace tsprl {

/// Greedy tour from `start`, always moving to the nearest unvisited city.
/// Ties break toward the lowest city index.
inline Tour nearest_neighbor(const DistanceMatrix& dm, int start) {
    const int n = dm.n();
    if (start < 0 || start >= n)
        throw ParameterError("nearest_neighbor start " + std::to_string(start) +
                             " out of range [0," + std::to_string(n - 1) + "]");
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(n));
    perm.push_back(start);
    visited[static_cast<std::size_t>(start)] = true;
    for (int step = 1; step < n; ++step) {
        const int cur = perm.back();
        int best = -1;
        double best_d = 0.0;
        for (int j = 0; j < n; ++j) {
            if (visited[static_cast<std::size_t>(j)])
                continue;
            const double d = dm(cur, j);
            if (best < 0 || d < best_d) {
                best = j;
                best_d = d;
            }
        }
        perm.push_back(best);
        visited[static_cast<std::size_t>(best)] = true;
    }
    return Tour(perm);
}

inline Tour nearest_neighbor(const TspInstance& instance, int start) {
    return nearest_neighbor(DistanceMatrix(instance), start);
}

/// Improves `tour` to a 2-opt local optimum: sweeps all edge pairs and
/// reverses the enclosed segment whenever that shortens the tour, until a
/// full sweep finds nothing. Never returns a longer tour than its input.
inline Tour two_opt(const DistanceMatrix& dm, Tour tour) {
    require_valid_tour(tour, dm.n());
    const int n = dm.n();
    auto& p = tour.perm;
    bool improved = true;
    while (improved) {
        improved = false;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (i == 0 && j == n - 1)
                    continue; // whole-tour reversal, no-op on a cycle
                const int a = p[static_cast<std::size_t>(i == 0 ? n - 1 : i - 1)];
                const int b = p[static_cast<std::size_t>(i)];
                const int c = p[static_cast<std::size_t>(j)];
                const int d = p[static_cast<std::size_t>((j + 1) % n)];
                const double delta = dm(a, c) + dm(b, d) - dm(a, b) - dm(c, d);
                if (delta < -1e-12) {
                    std::reverse(p.begin() + i, p.begin() + j + 1);
                    improved = true;
                }
            }
        }
    }
    return tour;
}

inline Tour two_opt(const TspInstance& instance, Tour tour) {
    return two_opt(DistanceMatrix(instance), std::move(tour));
}

} // namespace tsprl
