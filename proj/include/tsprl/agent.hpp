#pragma once

/// Actor-critic pair. The actor maps a raw episode encoding to a softmax
/// score vector over cities; its mean over the batch is the update vector
/// for the transition matrix. The critic predicts tour length and serves as
/// the REINFORCE baseline.
///
/// The policy-gradient term treats the actor's score vector as a
/// sequential-choice (Plackett-Luce) distribution over permutations with the
/// start city given: at each step the next city is drawn with probability
/// proportional to its score among the unvisited. That makes
/// log p(tour) differentiable in the actor parameters.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tsprl/errors.hpp"
#include "tsprl/net.hpp"
#include "tsprl/policy.hpp"
#include "tsprl/tsp.hpp"

namespace tsprl {

/// Raw 2-D input row: city coordinates concatenated in tour order.
inline std::vector<double> encode_episode(const TspInstance& instance, const Tour& tour) {
    require_valid_tour(tour, instance.n());
    std::vector<double> row;
    row.reserve(2 * static_cast<std::size_t>(instance.n()));
    for (int c : tour.perm) {
        const Point p = instance.city(c);
        row.push_back(p.x);
        row.push_back(p.y);
    }
    return row;
}

/// A mini-batch of episodes with their lengths and encodings.
struct EpisodeBatch {
    std::vector<Tour> episodes;
    std::vector<double> lengths;
    Matrix encodings; ///< B x 2n

    int size() const { return static_cast<int>(episodes.size()); }
};

inline EpisodeBatch make_batch(const TspInstance& instance, std::vector<Tour> tours) {
    if (tours.empty())
        throw ParameterError("episode batch must not be empty");
    EpisodeBatch batch;
    const int b = static_cast<int>(tours.size());
    batch.encodings = Matrix(b, 2 * instance.n());
    batch.lengths.reserve(tours.size());
    for (int r = 0; r < b; ++r) {
        const auto row = encode_episode(instance, tours[static_cast<std::size_t>(r)]);
        std::copy(row.begin(), row.end(),
                  batch.encodings.v.begin() + static_cast<std::ptrdiff_t>(r) * batch.encodings.cols);
        batch.lengths.push_back(tour_length(instance, tours[static_cast<std::size_t>(r)]));
    }
    batch.episodes = std::move(tours);
    return batch;
}

struct ActorCritic {
    DenseNet actor;
    DenseNet critic;
    OptimizerState actor_opt;
    OptimizerState critic_opt;

    /// Nets sized for an n-city instance: actor 2n -> [64,32,32,32,32] -> n
    /// softmax, critic 2n -> [64,32,32,16,8] -> 1 scalar.
    static ActorCritic create(int n, std::uint64_t seed, double lr_actor = 3e-4,
                              double lr_critic = 2e-4, double decay = 0.96, double eps = 1e-6) {
        if (n < 3)
            throw ParameterError("actor-critic needs n >= 3");
        DenseNet actor = init_net({2 * n, 64, 32, 32, 32, 32, n}, Head::Softmax,
                                  derive_seed(seed, 0xac7));
        DenseNet critic = init_net({2 * n, 64, 32, 32, 16, 8, 1}, Head::LinearScalar,
                                   derive_seed(seed, 0xc21));
        OptimizerState aopt = OptimizerState::for_net(actor, lr_actor, decay, eps);
        OptimizerState copt = OptimizerState::for_net(critic, lr_critic, decay, eps);
        return {std::move(actor), std::move(critic), std::move(aopt), std::move(copt)};
    }

    int n() const { return actor.output_width(); }
};

/// Log-likelihood of drawing `tour` under sequential choice with the given
/// positive scores, the first city taken as given. The last step is forced
/// and contributes zero.
inline double sequential_log_prob(const std::vector<double>& scores, const Tour& tour) {
    const int n = tour.n();
    if (static_cast<int>(scores.size()) != n)
        throw ShapeError("score vector length does not match tour");
    double remaining = 0.0;
    for (double s : scores) {
        if (!(s > 0.0))
            throw NumericError("sequential_log_prob needs strictly positive scores");
        remaining += s;
    }
    double log_prob = 0.0;
    remaining -= scores[static_cast<std::size_t>(tour.perm[0])];
    for (int t = 1; t < n; ++t) {
        const double s = scores[static_cast<std::size_t>(tour.perm[static_cast<std::size_t>(t)])];
        log_prob += std::log(s) - std::log(remaining);
        remaining -= s;
    }
    return log_prob;
}

/// Gradient of sequential_log_prob with respect to the scores.
inline std::vector<double> sequential_log_prob_grad(const std::vector<double>& scores,
                                                    const Tour& tour) {
    const int n = tour.n();
    std::vector<double> grad(static_cast<std::size_t>(n), 0.0);
    // remaining mass before each choice t = 1..n-1
    std::vector<double> remaining(static_cast<std::size_t>(n), 0.0);
    double mass = 0.0;
    for (double s : scores)
        mass += s;
    mass -= scores[static_cast<std::size_t>(tour.perm[0])];
    double inv_sum = 0.0; // sum over earlier choices of 1/remaining
    for (int t = 1; t < n; ++t) {
        const int city = tour.perm[static_cast<std::size_t>(t)];
        inv_sum += 1.0 / mass;
        grad[static_cast<std::size_t>(city)] =
            1.0 / scores[static_cast<std::size_t>(city)] - inv_sum;
        mass -= scores[static_cast<std::size_t>(city)];
    }
    // start city appears in no numerator and no remaining-mass term
    return grad;
}

/// Mean of the actor's softmax rows over the batch; the update vector fed
/// into the transition matrix.
inline UpdateVector actor_update_vector(const ActorCritic& ac, const EpisodeBatch& batch) {
    const Matrix out = forward(ac.actor, batch.encodings);
    UpdateVector v;
    v.v.assign(static_cast<std::size_t>(out.cols), 0.0);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            v.v[static_cast<std::size_t>(c)] += out.at(r, c) / out.rows;
    return v;
}

/// Critic predictions for each episode in the batch.
inline std::vector<double> critic_baselines(const ActorCritic& ac, const EpisodeBatch& batch) {
    const Matrix out = forward(ac.critic, batch.encodings);
    std::vector<double> b(static_cast<std::size_t>(out.rows));
    for (int r = 0; r < out.rows; ++r)
        b[static_cast<std::size_t>(r)] = out.at(r, 0);
    return b;
}

struct ActorGradient {
    ParamBlocks grads;
    double surrogate = 0.0;      ///< (1/B) sum_i advantage_i * log p_i
    double mean_advantage = 0.0; ///< (1/B) sum_i (L_i - b_i)
    double forward_seconds = 0.0;
    double backward_seconds = 0.0;
};

/// REINFORCE gradient of the expected-length objective:
///   (1/B) sum_i (L_i - b_i) * d log p(tour_i) / d theta_act
/// Baselines come from the critic unless supplied explicitly; either way
/// they are constants to this gradient.
inline ActorGradient actor_gradient(const ActorCritic& ac, const EpisodeBatch& batch,
                                    const std::vector<double>* baselines = nullptr) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const std::vector<double> b_values =
        baselines ? *baselines : critic_baselines(ac, batch);
    if (b_values.size() != batch.episodes.size())
        throw ShapeError("baseline count does not match batch");

    ForwardTrace trace;
    const Matrix rows = forward(ac.actor, batch.encodings, &trace);
    const auto t1 = clock::now();

    const int b = batch.size();
    const int n = rows.cols;
    Matrix output_grad(b, n);
    ActorGradient result;
    for (int r = 0; r < b; ++r) {
        std::vector<double> scores(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c)
            scores[static_cast<std::size_t>(c)] = rows.at(r, c);
        const Tour& tour = batch.episodes[static_cast<std::size_t>(r)];
        const double advantage =
            batch.lengths[static_cast<std::size_t>(r)] - b_values[static_cast<std::size_t>(r)];
        result.surrogate += advantage * sequential_log_prob(scores, tour) / b;
        result.mean_advantage += advantage / b;
        const auto g = sequential_log_prob_grad(scores, tour);
        for (int c = 0; c < n; ++c)
            output_grad.at(r, c) = advantage * g[static_cast<std::size_t>(c)] / b;
    }
    result.grads = backward(ac.actor, trace, output_grad);
    result.forward_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.backward_seconds = std::chrono::duration<double>(clock::now() - t1).count();
    return result;
}

/// One REINFORCE + RMSProp step on the actor. Returns diagnostics.
inline ActorGradient reinforce_step(ActorCritic& ac, const EpisodeBatch& batch) {
    ActorGradient g = actor_gradient(ac, batch);
    const auto t0 = std::chrono::steady_clock::now();
    rmsprop_step(ac.actor_opt, ac.actor, g.grads);
    g.backward_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g;
}

struct CriticGradient {
    ParamBlocks grads;
    double mse = 0.0; ///< (1/B) sum_i (b_i - L_i)^2, before the step
    double forward_seconds = 0.0;
    double backward_seconds = 0.0;
};

/// Gradient of the critic's mean-squared-error against observed lengths.
inline CriticGradient critic_gradient(const ActorCritic& ac, const EpisodeBatch& batch) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    ForwardTrace trace;
    const Matrix out = forward(ac.critic, batch.encodings, &trace);
    const auto t1 = clock::now();

    const int b = batch.size();
    Matrix output_grad(b, 1);
    CriticGradient result;
    for (int r = 0; r < b; ++r) {
        const double err = out.at(r, 0) - batch.lengths[static_cast<std::size_t>(r)];
        result.mse += err * err / b;
        output_grad.at(r, 0) = 2.0 * err / b;
    }
    result.grads = backward(ac.critic, trace, output_grad);
    result.forward_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.backward_seconds = std::chrono::duration<double>(clock::now() - t1).count();
    return result;
}

/// One MSE + RMSProp step on the critic. Returns the pre-step mse.
inline CriticGradient critic_step(ActorCritic& ac, const EpisodeBatch& batch) {
    CriticGradient g = critic_gradient(ac, batch);
    const auto t0 = std::chrono::steady_clock::now();
    rmsprop_step(ac.critic_opt, ac.critic, g.grads);
    g.backward_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g;
}

} // namespace tsprl
