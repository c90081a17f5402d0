#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "tsprl/policy.hpp"

using namespace tsprl;

namespace {

Tour random_tour(int n, Rng& rng) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[rng.next_below(static_cast<std::size_t>(i + 1))]);
    return Tour(perm);
}

TransitionMatrix random_stochastic(int n, Rng& rng) {
    auto m = TransitionMatrix::uniform(n);
    UpdateVector v;
    v.v.resize(static_cast<std::size_t>(n));
    for (int round = 0; round < 30; ++round) {
        for (double& x : v.v)
            x = rng.next_double();
        m.apply_update(v, tour_edges(random_tour(n, rng)), 0.5);
    }
    return m;
}

/// All permutations of 0..n-1 that begin with `start`.
std::vector<Tour> all_tours_from(int n, int start) {
    std::vector<int> rest;
    for (int i = 0; i < n; ++i)
        if (i != start)
            rest.push_back(i);
    std::vector<Tour> tours;
    std::sort(rest.begin(), rest.end());
    do {
        std::vector<int> perm = {start};
        perm.insert(perm.end(), rest.begin(), rest.end());
        tours.emplace_back(perm);
    } while (std::next_permutation(rest.begin(), rest.end()));
    return tours;
}

} // namespace

TEST_CASE("uniform init: off-diagonal mass split evenly") {
    const auto m = TransitionMatrix::uniform(4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(m.at(i, j) == Catch::Approx(i == j ? 0.0 : 1.0 / 3).margin(1e-15));
}

TEST_CASE("uniform init: forbidden entries renormalize the row") {
    const auto m = TransitionMatrix::uniform(4, {{0, 1}});
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.at(0, 2) == Catch::Approx(0.5).margin(1e-15));
    CHECK(m.at(0, 3) == Catch::Approx(0.5).margin(1e-15));
    CHECK(m.at(1, 0) == Catch::Approx(1.0 / 3).margin(1e-15));
}

TEST_CASE("uniform init: fully forbidden row rejected") {
    CHECK_THROWS_AS(TransitionMatrix::uniform(3, {{0, 1}, {0, 2}}), ConstraintError);
}

TEST_CASE("uniform init: fuzzed masks keep rows stochastic") {
    Rng rng(31);
    int built = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 3 + static_cast<int>(rng.next_below(8));
        std::vector<std::pair<int, int>> forbid;
        const int k = static_cast<int>(rng.next_below(static_cast<std::size_t>(n)));
        for (int c = 0; c < k; ++c)
            forbid.emplace_back(static_cast<int>(rng.next_below(static_cast<std::size_t>(n))),
                                static_cast<int>(rng.next_below(static_cast<std::size_t>(n))));
        try {
            const auto m = TransitionMatrix::uniform(n, forbid);
            m.validate(); // throws on any broken invariant
            ++built;
        } catch (const ConstraintError&) {
            // mask emptied a row; rejection is the contract
        }
    }
    CHECK(built > 800);
}

TEST_CASE("from_tour: boosted edges and even remainder") {
    const Tour t({0, 1, 2, 3});
    const auto m = TransitionMatrix::from_tour(4, t, 0.7);
    CHECK(m.at(0, 1) == Catch::Approx(0.7).margin(1e-15));
    CHECK(m.at(0, 2) == Catch::Approx(0.15).margin(1e-15));
    CHECK(m.at(0, 3) == Catch::Approx(0.15).margin(1e-15));
    CHECK(m.at(3, 0) == Catch::Approx(0.7).margin(1e-15)); // closing edge
    m.validate();
}

TEST_CASE("from_tour: decode reproduces the seeding tour for boost > 0.5") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng.next_below(10));
        const Tour t = random_tour(n, rng);
        const double boost = 0.5 + 1e-9 + rng.next_double() * (0.5 - 2e-9);
        const auto m = TransitionMatrix::from_tour(n, t, boost);
        const Tour decoded = greedy_decode(m, t.perm[0]);
        CHECK(decoded.perm == t.perm);
    }
}

TEST_CASE("from_tour: degenerate boost rejected") {
    const Tour t({0, 1, 2, 3});
    CHECK_THROWS_AS(TransitionMatrix::from_tour(4, t, 1.0 / 3), ParameterError);
    CHECK_THROWS_AS(TransitionMatrix::from_tour(4, t, 1.0), ParameterError);
    CHECK_THROWS_AS(TransitionMatrix::from_tour(4, t, 0.2), ParameterError);
}

TEST_CASE("sample_episode: always a valid permutation") {
    Rng rng(12);
    const auto m = TransitionMatrix::uniform(3);
    for (int k = 0; k < 100; ++k) {
        const Tour t = sample_episode(m, 0, rng);
        REQUIRE(is_valid_tour(t, 3));
        CHECK(t.perm[0] == 0);
    }
    const auto big = random_stochastic(9, rng);
    for (int k = 0; k < 500; ++k)
        REQUIRE(is_valid_tour(sample_episode(big, static_cast<int>(rng.next_below(9)), rng), 9));
}

TEST_CASE("sample_episode: a heavily boosted tour dominates the draw") {
    Rng rng(99);
    const Tour t({2, 0, 4, 1, 3});
    const auto m = TransitionMatrix::from_tour(5, t, 0.999);
    int hits = 0;
    const int draws = 10000;
    for (int k = 0; k < draws; ++k)
        if (sample_episode(m, 2, rng).perm == t.perm)
            ++hits;
    CHECK(hits >= static_cast<int>(draws * 0.99));
}

TEST_CASE("sample_episode: uniform first-step distribution passes chi-square") {
    Rng rng(5);
    const auto m = TransitionMatrix::uniform(6);
    std::vector<int> counts(6, 0);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k)
        ++counts[static_cast<std::size_t>(sample_episode(m, 0, rng).perm[1])];
    CHECK(counts[0] == 0);
    const double expected = draws / 5.0;
    double chi2 = 0.0;
    for (int j = 1; j < 6; ++j)
        chi2 += (counts[static_cast<std::size_t>(j)] - expected) *
                (counts[static_cast<std::size_t>(j)] - expected) / expected;
    CHECK(chi2 < 13.276704); // df=4, alpha=0.01
}

TEST_CASE("sample_episode: zero-mass rows fall back to uniform and get counted") {
    // forbid every transition out of 1 except back toward 0; once 0 is
    // visited the row has no allowed unvisited city left
    const auto m = TransitionMatrix::uniform(4, {{1, 2}, {1, 3}});
    Rng rng(1);
    long fallbacks = 0;
    for (int k = 0; k < 200; ++k) {
        const Tour t = sample_episode(m, 0, rng, &fallbacks);
        REQUIRE(is_valid_tour(t, 4));
    }
    CHECK(fallbacks > 0);
}

TEST_CASE("greedy_decode: uniform matrix follows the tie rule") {
    const auto m = TransitionMatrix::uniform(5);
    CHECK(greedy_decode(m, 2).perm == std::vector<int>{2, 0, 1, 3, 4});
    CHECK(greedy_decode(m, 0).perm == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("greedy_decode: valid permutation for fuzzed stochastic matrices") {
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 3 + static_cast<int>(rng.next_below(10));
        const auto m = random_stochastic(n, rng);
        const int start = static_cast<int>(rng.next_below(static_cast<std::size_t>(n)));
        REQUIRE(is_valid_tour(greedy_decode(m, start), n));
    }
}

TEST_CASE("apply_update: fixed point when v matches the entries") {
    auto m = TransitionMatrix::uniform(5);
    const Tour t({0, 1, 2, 3, 4});
    UpdateVector v;
    v.v.assign(5, 0.25); // uniform entries equal every P[i,j]
    const auto before = m.to_csv();
    m.apply_update(v, tour_edges(t), 0.01);
    CHECK(m.to_csv() == before);
}

TEST_CASE("apply_update: single-pair worked example") {
    auto m = TransitionMatrix::uniform(3);
    UpdateVector v;
    v.v = {1.0, 0.0, 0.0};
    m.apply_update(v, {{0, 1}}, 0.01);
    // pre-normalization row 0: [0, 0.505, 0.5] -> renormalized by 1.005
    CHECK(m.at(0, 1) == Catch::Approx(0.505 / 1.005).margin(1e-12));
    CHECK(m.at(0, 2) == Catch::Approx(0.500 / 1.005).margin(1e-12));
    CHECK(m.at(1, 0) == Catch::Approx(0.5).margin(1e-15)); // untouched row
}

TEST_CASE("apply_update: guards") {
    auto m = TransitionMatrix::uniform(4, {{0, 1}});
    UpdateVector v;
    v.v.assign(4, 0.5);
    CHECK_THROWS_AS(m.apply_update(v, {{0, 1}}, 0.01), ConstraintError);
    CHECK_THROWS_AS(m.apply_update(v, {{0, 2}}, 0.0), ParameterError);
    CHECK_THROWS_AS(m.apply_update(v, {{0, 2}}, 1.0), ParameterError);
    CHECK_THROWS_AS(m.apply_update(v, {{0, 4}}, 0.01), ParameterError);
    UpdateVector bad;
    bad.v = {0.5, 0.5, -0.1, 0.5};
    CHECK_THROWS_AS(m.apply_update(bad, {{0, 2}}, 0.01), ParameterError);
}

TEST_CASE("apply_update: ten thousand random updates keep every invariant") {
    Rng rng(77);
    const int n = 8;
    auto m = TransitionMatrix::uniform(n, {{2, 5}, {7, 0}});
    UpdateVector v;
    v.v.resize(static_cast<std::size_t>(n));
    for (int round = 0; round < 10000; ++round) {
        for (double& x : v.v)
            x = rng.next_double();
        Tour t = random_tour(n, rng);
        auto edges = tour_edges(t);
        std::erase_if(edges, [&](const auto& e) { return m.forbidden(e.first, e.second); });
        m.apply_update(v, edges, 0.001 + 0.998 * rng.next_double());
    }
    m.validate();
    CHECK(m.at(2, 5) == 0.0);
    CHECK(m.at(7, 0) == 0.0);
}

TEST_CASE("apply_update: epsilon -> 0 is the identity") {
    Rng rng(3);
    auto m = random_stochastic(6, rng);
    std::vector<double> before;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            before.push_back(m.at(i, j));
    UpdateVector v;
    v.v.assign(6, 0.9);
    m.apply_update(v, tour_edges(random_tour(6, rng)), 1e-12);
    std::size_t k = 0;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK(std::fabs(m.at(i, j) - before[k++]) < 1e-9);
}

TEST_CASE("tour_probability: two-way choice at n=3") {
    const auto m = TransitionMatrix::uniform(3);
    CHECK(tour_probability(m, Tour({0, 1, 2})) == Catch::Approx(0.5).margin(1e-12));
    CHECK(tour_probability(m, Tour({0, 2, 1})) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("tour_probability: sums to one over all tours from a fixed start") {
    Rng rng(55);
    for (int n = 4; n <= 7; ++n) {
        const auto m = random_stochastic(n, rng);
        double total = 0.0;
        for (const Tour& t : all_tours_from(n, 0))
            total += tour_probability(m, t);
        CHECK(total == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("tour_probability: forbidden edge gives zero") {
    const auto m = TransitionMatrix::uniform(4, {{1, 2}});
    CHECK(tour_probability(m, Tour({0, 1, 2, 3})) == 0.0);
    CHECK(tour_probability(m, Tour({0, 1, 3, 2})) > 0.0);
}

TEST_CASE("tour_probability matches sample_episode frequencies (chi-square)") {
    Rng rng(2025);
    const int n = 5;
    const auto m = random_stochastic(n, rng);
    const auto tours = all_tours_from(n, 0);
    std::map<std::vector<int>, int> counts;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k)
        ++counts[sample_episode(m, 0, rng).perm];
    double chi2 = 0.0;
    for (const Tour& t : tours) {
        const double expected = draws * tour_probability(m, t);
        REQUIRE(expected > 5.0); // chi-square validity
        const double observed = counts.count(t.perm) ? counts[t.perm] : 0;
        chi2 += (observed - expected) * (observed - expected) / expected;
    }
    CHECK(chi2 < 41.638398); // df=23, alpha=0.01
}

TEST_CASE("matrix csv snapshot has n rows of n columns") {
    const auto m = TransitionMatrix::uniform(4);
    const std::string csv = m.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(std::count(csv.begin(), csv.end(), ',') == 12);
}
