#pragma once

/// The unified training-and-search loop: sample tours from the transition
/// matrix, track the incumbent, train the actor-critic on a sub-batch, and
/// periodically pull the matrix toward the actor's update vector.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsprl/agent.hpp"
#include "tsprl/errors.hpp"
#include "tsprl/exact.hpp"
#include "tsprl/heuristics.hpp"
#include "tsprl/net.hpp"
#include "tsprl/policy.hpp"
#include "tsprl/rng.hpp"
#include "tsprl/tsp.hpp"

namespace tsprl {

enum class InitMode {
    Uniform,        ///< uniform over allowed transitions
    NearestNeighbor ///< boosted along a nearest-neighbor tour
};

struct SolverConfig {
    int steps = 250;   ///< search iterations
    int samples = 250; ///< episodes sampled per step (T)
    int batch = 4;     ///< training mini-batch size (B)

    /// Transition-matrix learning rate. Zero is the documented ablation
    /// switch: no matrix updates and no net training, pure sampling.
    double epsilon = 0.01;

    int k = 1;           ///< apply the matrix update every k steps
    int k_increment = 0; ///< optional linear growth of k after each update
    int k_cap = 0;       ///< growth ceiling; 0 means unbounded

    double lr_actor = 3e-4;
    double lr_critic = 2e-4;
    double rmsprop_decay = 0.96;
    double rmsprop_eps = 1e-6;

    InitMode init = InitMode::Uniform;
    double boost = 0.9; ///< tour-edge probability for nearest-neighbor init

    std::uint64_t seed = 0;
    std::vector<std::pair<int, int>> forbidden;
    int fixed_start = -1; ///< episode start city; -1 draws uniformly per episode

    void validate() const {
        if (steps < 1 || samples < 1 || batch < 1)
            throw ParameterError("steps, samples and batch must all be >= 1");
        if (batch > samples)
            throw ParameterError("batch must not exceed samples");
        if (!(epsilon >= 0.0 && epsilon < 1.0))
            throw ParameterError("epsilon must be in [0,1) (0 = ablation)");
        if (k < 1 || k_increment < 0 || k_cap < 0)
            throw ParameterError("k must be >= 1 and schedule fields nonnegative");
        if (!(lr_actor > 0.0) || !(lr_critic > 0.0))
            throw ParameterError("learning rates must be positive");
        if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0) || !(rmsprop_eps > 0.0))
            throw ParameterError("rmsprop decay must be in (0,1), eps positive");
        if (!(boost > 0.0 && boost < 1.0))
            throw ParameterError("boost must be in (0,1)");
    }
};

struct StepRecord {
    int step = 0;
    double best_length = 0.0; ///< incumbent after this step
    double batch_mean = 0.0;  ///< mean length of the step's sampled episodes
    double critic_mse = 0.0;  ///< pre-step critic loss (0 in ablation runs)
};

/// Accumulated seconds per loop phase, mirroring the usual execution-time
/// breakdown: net forward passes count as inference, backward passes and
/// optimizer steps as training.
struct Timings {
    double graph_gen = 0.0; ///< instance prep: distance table, nets, matrix
    double training = 0.0;
    double sampling = 0.0;
    double inference = 0.0;
    double matrix_update = 0.0;
    double other = 0.0;
    double total = 0.0;
};

struct SolveResult {
    Tour best_tour;
    double best_length = 0.0;
    std::vector<StepRecord> history;
    Timings timings;
    std::optional<TransitionMatrix> final_matrix;
    Tour policy; ///< greedy decode of the final matrix from the best tour's start
    long sample_fallbacks = 0;
    bool aborted = false;
    std::string abort_reason;
};

namespace detail {

class PhaseTimer {
  public:
    explicit PhaseTimer(double& sink) : sink_(sink), start_(clock::now()) {}
    ~PhaseTimer() { sink_ += std::chrono::duration<double>(clock::now() - start_).count(); }

  private:
    using clock = std::chrono::steady_clock;
    double& sink_;
    clock::time_point start_;
};

inline bool tour_less(double len_a, const Tour& a, double len_b, const Tour& b) {
    if (len_a != len_b)
        return len_a < len_b;
    return a.perm < b.perm; // deterministic tie-break
}

} // namespace detail

/// Runs the full search on one instance. Deterministic for a fixed config.
/// A numeric failure mid-run aborts the loop but still returns the incumbent
/// with `aborted` set.
inline SolveResult solve(const TspInstance& instance, const SolverConfig& config) {
    config.validate();
    const int n = instance.n();
    if (config.fixed_start >= n)
        throw ParameterError("fixed_start out of range");
    if (config.init == InitMode::NearestNeighbor && !config.forbidden.empty())
        throw ParameterError("nearest-neighbor init does not support forbidden edges");
    if (config.init == InitMode::NearestNeighbor && !(config.boost > 1.0 / (n - 1)))
        throw ParameterError("boost must exceed the uniform mass 1/(n-1)");

    const auto t_begin = std::chrono::steady_clock::now();
    SolveResult result;

    // instance preparation
    std::optional<DistanceMatrix> dm;
    std::optional<ActorCritic> ac;
    std::optional<TransitionMatrix> matrix;
    {
        detail::PhaseTimer timer(result.timings.graph_gen);
        dm.emplace(instance);
        ac.emplace(ActorCritic::create(n, derive_seed(config.seed, 0), config.lr_actor,
                                       config.lr_critic, config.rmsprop_decay,
                                       config.rmsprop_eps));
        if (config.init == InitMode::Uniform) {
            matrix.emplace(TransitionMatrix::uniform(n, config.forbidden));
        } else {
            const Tour nn = nearest_neighbor(*dm, 0);
            matrix.emplace(TransitionMatrix::from_tour(n, nn, config.boost));
        }
    }

    Rng sample_rng(derive_seed(config.seed, 1));
    Rng start_rng(derive_seed(config.seed, 2));
    Rng batch_rng(derive_seed(config.seed, 3));

    const auto pick_start = [&]() {
        return config.fixed_start >= 0
                   ? config.fixed_start
                   : static_cast<int>(start_rng.next_below(static_cast<std::size_t>(n)));
    };

    // incumbent: one episode before the loop; under nearest-neighbor init the
    // greedy decode reproduces the seeding tour, so the incumbent starts there
    if (config.init == InitMode::NearestNeighbor) {
        result.best_tour = greedy_decode(*matrix, 0);
    } else {
        result.best_tour = sample_episode(*matrix, pick_start(), sample_rng,
                                          &result.sample_fallbacks);
    }
    result.best_length = tour_length(*dm, result.best_tour);

    int k_current = config.k;
    int k_counter = 0;
    result.history.reserve(static_cast<std::size_t>(config.steps));

    std::vector<Tour> episodes(static_cast<std::size_t>(config.samples));
    std::vector<double> lengths(static_cast<std::size_t>(config.samples));

    for (int step = 1; step <= config.steps; ++step) {
        // --- sample T episodes from the matrix ---
        int best_idx = 0;
        double mean_len = 0.0;
        {
            detail::PhaseTimer timer(result.timings.sampling);
            for (int s = 0; s < config.samples; ++s) {
                episodes[static_cast<std::size_t>(s)] =
                    sample_episode(*matrix, pick_start(), sample_rng, &result.sample_fallbacks);
                const double len = tour_length(*dm, episodes[static_cast<std::size_t>(s)]);
                lengths[static_cast<std::size_t>(s)] = len;
                mean_len += len;
                if (s > 0 && detail::tour_less(len, episodes[static_cast<std::size_t>(s)],
                                               lengths[static_cast<std::size_t>(best_idx)],
                                               episodes[static_cast<std::size_t>(best_idx)]))
                    best_idx = s;
            }
            mean_len /= config.samples;
        }
        const Tour& step_best = episodes[static_cast<std::size_t>(best_idx)];
        const double step_best_len = lengths[static_cast<std::size_t>(best_idx)];

        if (step_best_len < result.best_length) {
            result.best_length = step_best_len;
            result.best_tour = step_best;
        }

        double critic_mse = 0.0;
        if (config.epsilon > 0.0) {
            try {
                // --- train actor and critic on a B-episode sub-batch ---
                EpisodeBatch batch;
                {
                    detail::PhaseTimer timer(result.timings.other);
                    const auto picks = sample_indices(config.samples, config.batch, batch_rng);
                    std::vector<Tour> chosen;
                    chosen.reserve(picks.size());
                    for (int idx : picks)
                        chosen.push_back(episodes[static_cast<std::size_t>(idx)]);
                    batch = make_batch(instance, std::move(chosen));
                }
                const ActorGradient adiag = reinforce_step(*ac, batch);
                const CriticGradient cdiag = critic_step(*ac, batch);
                critic_mse = cdiag.mse;
                result.timings.inference += adiag.forward_seconds + cdiag.forward_seconds;
                result.timings.training += adiag.backward_seconds + cdiag.backward_seconds;

                // --- every k steps: pull matrix toward the update vector ---
                UpdateVector v;
                {
                    const auto t0 = std::chrono::steady_clock::now();
                    v = actor_update_vector(*ac, batch);
                    result.timings.inference +=
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
                }
                if (++k_counter >= k_current) {
                    detail::PhaseTimer timer(result.timings.matrix_update);
                    matrix->apply_update(v, tour_edges(step_best), config.epsilon);
                    k_counter = 0;
                    if (config.k_increment > 0) {
                        k_current += config.k_increment;
                        if (config.k_cap > 0)
                            k_current = std::min(k_current, config.k_cap);
                    }
                }
            } catch (const NumericError& e) {
                result.aborted = true;
                result.abort_reason = e.what();
            }
        }

        result.history.push_back({step, result.best_length, mean_len, critic_mse});
        if (result.aborted)
            break;
    }

    result.policy = greedy_decode(*matrix, result.best_tour.perm[0]);
    result.final_matrix = std::move(matrix);
    result.timings.total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    const double tracked = result.timings.graph_gen + result.timings.training +
                           result.timings.sampling + result.timings.inference +
                           result.timings.matrix_update + result.timings.other;
    result.timings.other += std::max(0.0, result.timings.total - tracked);
    return result;
}

/// solve() with the transition matrix seeded from nearest neighbor.
inline SolveResult solve_with_nn_seed(const TspInstance& instance, SolverConfig config) {
    config.init = InitMode::NearestNeighbor;
    return solve(instance, config);
}

/// Per-step averages of the loop phases plus one-off preparation time.
struct TimingReport {
    double prep_seconds = 0.0;
    double per_step_training = 0.0;
    double per_step_sampling = 0.0;
    double per_step_inference = 0.0;
    double per_step_matrix_update = 0.0;
    double per_step_other = 0.0;
    int steps = 0;
    double total_seconds = 0.0;
};

inline TimingReport timing_report(const SolveResult& result) {
    TimingReport r;
    r.steps = static_cast<int>(result.history.size());
    const double steps = std::max(1, r.steps);
    r.prep_seconds = result.timings.graph_gen;
    r.per_step_training = result.timings.training / steps;
    r.per_step_sampling = result.timings.sampling / steps;
    r.per_step_inference = result.timings.inference / steps;
    r.per_step_matrix_update = result.timings.matrix_update / steps;
    r.per_step_other = result.timings.other / steps;
    r.total_seconds = result.timings.total;
    return r;
}

/// Reference length for gap reporting: exact optimum up to n=20, otherwise
/// the 2-opt-improved nearest-neighbor tour.
struct GapReference {
    double length = 0.0;
    std::string kind;
};

inline GapReference gap_reference(const TspInstance& instance) {
    if (instance.n() <= 20)
        return {held_karp(instance).length, "exact"};
    const DistanceMatrix dm(instance);
    return {tour_length(dm, two_opt(dm, nearest_neighbor(dm, 0))), "two-opt"};
}

struct SweepResult {
    std::vector<int> samples_axis;
    std::vector<int> steps_axis;
    std::vector<std::vector<double>> gap_percent; ///< [samples][steps]
    GapReference reference;
};

/// Gap table over a (samples, steps) grid; every cell runs with the same
/// seed and the same reference length.
inline SweepResult sweep(const TspInstance& instance, std::vector<int> samples_axis,
                         std::vector<int> steps_axis, SolverConfig base) {
    if (samples_axis.empty() || steps_axis.empty())
        throw ParameterError("sweep grid must not be empty");
    SweepResult out;
    out.samples_axis = std::move(samples_axis);
    out.steps_axis = std::move(steps_axis);
    out.reference = gap_reference(instance);
    for (int t : out.samples_axis) {
        std::vector<double> row;
        for (int s : out.steps_axis) {
            SolverConfig config = base;
            config.samples = t;
            config.steps = s;
            config.batch = std::min(config.batch, t);
            const SolveResult r = solve(instance, config);
            row.push_back((r.best_length - out.reference.length) / out.reference.length * 100.0);
        }
        out.gap_percent.push_back(std::move(row));
    }
    return out;
}

} // namespace tsprl
