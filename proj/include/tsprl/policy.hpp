#pragma once

/// The row-stochastic city-transition matrix: initialization (uniform or
/// seeded from a heuristic tour), episode sampling, greedy decoding and the
/// convex update that pulls tour edges toward the actor's update vector.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsprl/errors.hpp"
#include "tsprl/io.hpp"
#include "tsprl/rng.hpp"
#include "tsprl/tsp.hpp"

namespace tsprl {

/// Length-n probability vector produced by the actor; entry i steers row i
/// of the transition matrix.
struct UpdateVector {
    std::vector<double> v;

    int n() const { return static_cast<int>(v.size()); }
};

inline void require_valid_update_vector(const UpdateVector& u, int n) {
    if (u.n() != n)
        throw ShapeError("update vector length " + std::to_string(u.n()) + ", expected " +
                         std::to_string(n));
    for (double x : u.v)
        if (!std::isfinite(x) || x < 0.0 || x > 1.0)
            throw ParameterError("update vector entries must be finite and in [0,1]");
}

/// Row-stochastic n x n matrix. Diagonal and explicitly forbidden entries
/// are exactly zero and stay zero through every update; all other entries
/// stay strictly positive (floored at 1e-12) so exploration never dies.
class TransitionMatrix {
  public:
    static constexpr double kFloor = 1e-12;

    int n() const { return n_; }

    double at(int i, int j) const { return p_[idx(i, j)]; }
    bool forbidden(int i, int j) const { return forbidden_[idx(i, j)] != 0; }

    /// Probability row for city i (length n).
    const double* row(int i) const { return &p_[idx(i, 0)]; }

    /// Uniform initialization over allowed off-diagonal columns.
    static TransitionMatrix uniform(int n, const std::vector<std::pair<int, int>>& forbid = {}) {
        TransitionMatrix m(n);
        m.mark_forbidden(forbid);
        for (int i = 0; i < n; ++i) {
            int allowed = 0;
            for (int j = 0; j < n; ++j)
                if (!m.forbidden(i, j))
                    ++allowed;
            if (allowed == 0)
                throw ConstraintError("row " + std::to_string(i) +
                                      " has no allowed transitions");
            for (int j = 0; j < n; ++j)
                m.p_[m.idx(i, j)] = m.forbidden(i, j) ? 0.0 : 1.0 / allowed;
        }
        m.check();
        return m;
    }

    /// Initialization biased toward a precomputed tour: every tour edge gets
    /// probability `boost`, the rest of the row splits the remainder evenly.
    /// boost must lie strictly between the uniform mass 1/(n-1) and 1.
    static TransitionMatrix from_tour(int n, const Tour& tour, double boost) {
        require_valid_tour(tour, n);
        const double uniform_mass = 1.0 / (n - 1);
        if (!(boost > uniform_mass && boost < 1.0))
            throw ParameterError("boost must be in (1/(n-1), 1), got " + std::to_string(boost));
        TransitionMatrix m(n);
        const double rest = (1.0 - boost) / (n - 2);
        for (int k = 0; k < n; ++k) {
            const int i = tour.perm[static_cast<std::size_t>(k)];
            const int j = tour.perm[static_cast<std::size_t>((k + 1) % n)];
            for (int c = 0; c < n; ++c)
                m.p_[m.idx(i, c)] = c == i ? 0.0 : (c == j ? boost : rest);
        }
        m.check();
        return m;
    }

    /// Convex step toward the update vector on the given (from, to) pairs
    /// (normally the edges of the current best tour), then renormalization
    /// and flooring of every touched row.
    void apply_update(const UpdateVector& v, const std::vector<std::pair<int, int>>& pairs,
                      double epsilon) {
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw ParameterError("epsilon must be in (0,1), got " + std::to_string(epsilon));
        require_valid_update_vector(v, n_);
        std::vector<bool> touched(static_cast<std::size_t>(n_), false);
        for (const auto& [i, j] : pairs) {
            if (i < 0 || i >= n_ || j < 0 || j >= n_)
                throw ParameterError("pair (" + std::to_string(i) + "," + std::to_string(j) +
                                     ") out of range");
            if (forbidden(i, j))
                throw ConstraintError("pair (" + std::to_string(i) + "," + std::to_string(j) +
                                      ") is a forbidden transition");
            auto& cell = p_[idx(i, j)];
            cell += epsilon * (v.v[static_cast<std::size_t>(i)] - cell);
            touched[static_cast<std::size_t>(i)] = true;
        }
        for (int i = 0; i < n_; ++i)
            if (touched[static_cast<std::size_t>(i)])
                repair_row(i);
        check();
    }

    /// Debug-facing invariant check (cheap; used by tests and debug builds).
    void validate() const {
        for (int i = 0; i < n_; ++i) {
            double sum = 0.0;
            for (int j = 0; j < n_; ++j) {
                const double x = at(i, j);
                if (!(x >= 0.0 && x <= 1.0))
                    throw NumericError("entry out of [0,1] at (" + std::to_string(i) + "," +
                                       std::to_string(j) + ")");
                if (forbidden(i, j) && x != 0.0)
                    throw ConstraintError("forbidden entry nonzero at (" + std::to_string(i) +
                                          "," + std::to_string(j) + ")");
                sum += x;
            }
            if (std::fabs(sum - 1.0) > 1e-9)
                throw NumericError("row " + std::to_string(i) + " sums to " +
                                   std::to_string(sum));
        }
    }

    /// Row-major CSV snapshot at full precision.
    std::string to_csv() const {
        std::string out;
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                if (j)
                    out += ",";
                out += format_double(at(i, j));
            }
            out += "\n";
        }
        return out;
    }

  private:
    explicit TransitionMatrix(int n) : n_(n) {
        if (n < 3)
            throw ParameterError("transition matrix needs n >= 3");
        p_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
        forbidden_.assign(p_.size(), 0);
        for (int i = 0; i < n; ++i)
            forbidden_[idx(i, i)] = 1;
    }

    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(j);
    }

    void mark_forbidden(const std::vector<std::pair<int, int>>& pairs) {
        for (const auto& [i, j] : pairs) {
            if (i < 0 || i >= n_ || j < 0 || j >= n_)
                throw ParameterError("forbidden pair (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") out of range");
            forbidden_[idx(i, j)] = 1;
        }
    }

    // renormalize over allowed columns, floor tiny entries, renormalize again
    void repair_row(int i) {
        double sum = 0.0;
        for (int j = 0; j < n_; ++j)
            sum += p_[idx(i, j)];
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw NumericError("row " + std::to_string(i) + " lost all probability mass");
        for (int j = 0; j < n_; ++j)
            p_[idx(i, j)] /= sum;
        double floored = 0.0;
        for (int j = 0; j < n_; ++j) {
            if (forbidden(i, j))
                continue;
            auto& cell = p_[idx(i, j)];
            if (cell < kFloor)
                cell = kFloor;
            floored += cell;
        }
        for (int j = 0; j < n_; ++j)
            if (!forbidden(i, j))
                p_[idx(i, j)] /= floored;
    }

    void check() const {
#ifndef NDEBUG
        validate();
#endif
    }

    int n_;
    std::vector<double> p_;
    std::vector<std::uint8_t> forbidden_;
};

/// Consecutive (city, successor) edges of a tour, closing edge included.
inline std::vector<std::pair<int, int>> tour_edges(const Tour& tour) {
    std::vector<std::pair<int, int>> edges;
    const int n = tour.n();
    edges.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        edges.emplace_back(tour.perm[static_cast<std::size_t>(k)],
                           tour.perm[static_cast<std::size_t>((k + 1) % n)]);
    return edges;
}

/// Samples one feasible tour: each step draws the next city from the current
/// row restricted to unvisited cities. A row with zero mass on every
/// unvisited city falls back to a uniform draw (counted, never fatal), so
/// sampling always terminates with a valid permutation.
inline Tour sample_episode(const TransitionMatrix& p, int start, Rng& rng,
                           long* fallback_count = nullptr) {
    const int n = p.n();
    if (start < 0 || start >= n)
        throw ParameterError("sample start " + std::to_string(start) + " out of range");
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(n));
    perm.push_back(start);
    visited[static_cast<std::size_t>(start)] = true;
    int cur = start;
    for (int step = 1; step < n; ++step) {
        const double* row = p.row(cur);
        double mass = 0.0;
        for (int j = 0; j < n; ++j)
            if (!visited[static_cast<std::size_t>(j)])
                mass += row[j];
        int next = -1;
        if (mass > 0.0) {
            const double u = rng.next_double() * mass;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                if (visited[static_cast<std::size_t>(j)])
                    continue;
                acc += row[j];
                next = j; // latest unvisited; stands if u lands past acc due to rounding
                if (u < acc)
                    break;
            }
        } else {
            if (fallback_count)
                ++*fallback_count;
            const auto k = rng.next_below(static_cast<std::size_t>(n - step));
            std::size_t seen = 0;
            for (int j = 0; j < n; ++j) {
                if (visited[static_cast<std::size_t>(j)])
                    continue;
                if (seen++ == k) {
                    next = j;
                    break;
                }
            }
        }
        perm.push_back(next);
        visited[static_cast<std::size_t>(next)] = true;
        cur = next;
    }
    return Tour(perm);
}

/// Deterministic decode: at each step take the most probable unvisited
/// city, ties toward the lowest index.
inline Tour greedy_decode(const TransitionMatrix& p, int start) {
    const int n = p.n();
    if (start < 0 || start >= n)
        throw ParameterError("decode start " + std::to_string(start) + " out of range");
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(n));
    perm.push_back(start);
    visited[static_cast<std::size_t>(start)] = true;
    int cur = start;
    for (int step = 1; step < n; ++step) {
        const double* row = p.row(cur);
        int best = -1;
        double best_p = -1.0;
        for (int j = 0; j < n; ++j) {
            if (visited[static_cast<std::size_t>(j)])
                continue;
            if (row[j] > best_p) {
                best_p = row[j];
                best = j;
            }
        }
        perm.push_back(best);
        visited[static_cast<std::size_t>(best)] = true;
        cur = best;
    }
    return Tour(perm);
}

/// Probability that sample_episode(start = tour front) produces exactly this
/// tour: the product of per-step renormalized row probabilities, with the
/// start city given. Zero only if the tour crosses a forbidden edge.
inline double tour_probability(const TransitionMatrix& p, const Tour& tour) {
    const int n = p.n();
    require_valid_tour(tour, n);
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    visited[static_cast<std::size_t>(tour.perm[0])] = true;
    double log_prob = 0.0;
    for (int step = 1; step < n; ++step) {
        const int cur = tour.perm[static_cast<std::size_t>(step - 1)];
        const int next = tour.perm[static_cast<std::size_t>(step)];
        const double* row = p.row(cur);
        if (row[next] == 0.0)
            return 0.0;
        double mass = 0.0;
        for (int j = 0; j < n; ++j)
            if (!visited[static_cast<std::size_t>(j)])
                mass += row[j];
        log_prob += std::log(row[next]) - std::log(mass);
        visited[static_cast<std::size_t>(next)] = true;
    }
    return std::exp(log_prob);
}

} // namespace tsprl
