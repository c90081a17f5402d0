#pragma once

/// Euclidean TSP instances, tours and tour evaluation.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsprl/errors.hpp"
#include "tsprl/rng.hpp"

namespace tsprl {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point a, Point b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// A set of n cities in the plane. Immutable after construction.
/// Rejects n < 3, non-finite coordinates and duplicate cities (zero-length
/// edges would make transition probabilities degenerate).
class TspInstance {
  public:
    explicit TspInstance(std::vector<Point> cities) : cities_(std::move(cities)) {
        if (cities_.size() < 3)
            throw ParameterError("instance needs at least 3 cities, got " +
                                 std::to_string(cities_.size()));
        for (std::size_t i = 0; i < cities_.size(); ++i) {
            if (!std::isfinite(cities_[i].x) || !std::isfinite(cities_[i].y))
                throw ParameterError("city " + std::to_string(i) + " has non-finite coordinates");
        }
        std::vector<std::pair<double, double>> sorted;
        sorted.reserve(cities_.size());
        for (const auto& c : cities_)
            sorted.emplace_back(c.x, c.y);
        std::sort(sorted.begin(), sorted.end());
        const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
        if (dup != sorted.end())
            throw ParameterError("duplicate city at (" + std::to_string(dup->first) + ", " +
                                 std::to_string(dup->second) + ")");
    }

    int n() const { return static_cast<int>(cities_.size()); }
    const std::vector<Point>& cities() const { return cities_; }
    Point city(int i) const { return cities_[static_cast<std::size_t>(i)]; }

  private:
    std::vector<Point> cities_;
};

/// A closed tour: permutation of the city indices, traversed in order with a
/// closing edge back to the first entry.
struct Tour {
    std::vector<int> perm;

    Tour() = default;
    explicit Tour(std::vector<int> p) : perm(std::move(p)) {}

    int n() const { return static_cast<int>(perm.size()); }
};

inline bool is_valid_tour(const Tour& tour, int n) {
    if (tour.n() != n)
        return false;
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int c : tour.perm) {
        if (c < 0 || c >= n || seen[static_cast<std::size_t>(c)])
            return false;
        seen[static_cast<std::size_t>(c)] = true;
    }
    return true;
}

inline void require_valid_tour(const Tour& tour, int n) {
    if (!is_valid_tour(tour, n))
        throw InvalidTourError("tour is not a permutation of 0.." + std::to_string(n - 1));
}

/// Total Euclidean length of the closed tour.
inline double tour_length(const TspInstance& instance, const Tour& tour) {
    require_valid_tour(tour, instance.n());
    const int n = instance.n();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point a = instance.city(tour.perm[static_cast<std::size_t>(i)]);
        const Point b = instance.city(tour.perm[static_cast<std::size_t>((i + 1) % n)]);
        total += distance(a, b);
    }
    return total;
}

/// Precomputed symmetric distance table. Built once per solve; sampling and
/// local search are lookup-heavy.
class DistanceMatrix {
  public:
    static constexpr int kMaxCities = 4096;

    explicit DistanceMatrix(const TspInstance& instance) : n_(instance.n()) {
        if (n_ > kMaxCities)
            throw SizeLimitError("distance matrix limited to " + std::to_string(kMaxCities) +
                                 " cities");
        d_.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                d_[idx(i, j)] = distance(instance.city(i), instance.city(j));
    }

    int n() const { return n_; }

    double operator()(int i, int j) const {
        assert(i >= 0 && i < n_ && j >= 0 && j < n_);
        return d_[idx(i, j)];
    }

  private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(j);
    }

    int n_;
    std::vector<double> d_;
};

/// Tour length via a precomputed table. Trusts the tour (hot path).
inline double tour_length(const DistanceMatrix& dm, const Tour& tour) {
    assert(is_valid_tour(tour, dm.n()));
    const int n = dm.n();
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        total += dm(tour.perm[static_cast<std::size_t>(i)],
                    tour.perm[static_cast<std::size_t>((i + 1) % n)]);
    return total;
}

/// n cities i.i.d. uniform in [0,1]^2, deterministic per seed.
inline TspInstance random_instance(int n, std::uint64_t seed) {
    if (n < 3)
        throw ParameterError("random_instance needs n >= 3, got " + std::to_string(n));
    Rng rng(derive_seed(seed, 0x1157));
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = rng.next_double();
        const double y = rng.next_double();
        pts.push_back({x, y});
    }
    return TspInstance(std::move(pts));
}

} // namespace tsprl
