#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "uavslice/maddpg.hpp"
#include "uavslice/networks.hpp"
#include "uavslice/nn.hpp"

namespace uavslice::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;
// Rounding in a deep forward pass perturbs the loss by a few ulps per difference; the
// worst seen at the default widths is about 17 ulps of |loss|, so 32 bounds the noise.
inline constexpr double kLossUlps = 32.0;

/// Absolute noise of a central difference on a loss of this magnitude.
inline double fd_noise(double loss) {
    return kLossUlps * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss)) / kFdStep;
}

inline double grad_rel_error(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

struct GradCheckReport {
    int probes = 0;      // resolvable entries, judged by relative error
    int rejected = 0;    // probes whose perturbation flipped a ReLU
    int unresolved = 0;  // gradients too small for a relative check, judged against fd_noise
    double max_rel_error = 0.0;
    double max_noise_ratio = 0.0;  // worst |analytic - numeric| / fd_noise among unresolved probes
    int failures = 0;

    bool passed(int required_probes) const { return probes >= required_probes && failures == 0; }
};

/// Scalar loss evaluated by a full forward pass, plus the ReLU sign pattern it produced.
struct Evaluation {
    double loss = 0.0;
    std::uint64_t pattern = 0;
};

/// Perturbs randomly chosen entries of `targets` by +-h and compares the central
/// difference to `analytic` (same layout as `targets`, already computed at the base point).
inline void probe_entries(std::vector<double*> targets, const std::vector<double>& analytic,
                          const std::function<Evaluation()>& evaluate, std::uint64_t base_pattern,
                          int wanted, std::mt19937_64& rng, GradCheckReport& report) {
    std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
    int attempts = 0;
    int accepted = 0;
    while (accepted < wanted && attempts < 50 * wanted) {
        ++attempts;
        const std::size_t k = pick(rng);
        double& x = *targets[k];
        const double keep = x;
        x = keep + kFdStep;
        const Evaluation up = evaluate();
        x = keep - kFdStep;
        const Evaluation down = evaluate();
        x = keep;
        if (up.pattern != base_pattern || down.pattern != base_pattern) {
            ++report.rejected;
            continue;
        }
        const double numeric = (up.loss - down.loss) / (2.0 * kFdStep);
        const double noise = fd_noise(std::max(std::abs(up.loss), std::abs(down.loss)));
        // a relative tolerance is only measurable once the gradient exceeds noise / tolerance
        if (std::max(std::abs(analytic[k]), std::abs(numeric)) < noise / kGradTolerance) {
            ++report.unresolved;
            const double ratio = std::abs(analytic[k] - numeric) / noise;
            report.max_noise_ratio = std::max(report.max_noise_ratio, ratio);
            if (ratio > 1.0) ++report.failures;
            continue;
        }
        const double err = grad_rel_error(analytic[k], numeric);
        report.max_rel_error = std::max(report.max_rel_error, err);
        if (err >= kGradTolerance) ++report.failures;
        ++report.probes;
        ++accepted;
    }
}

inline Tensor2 random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Tensor2 t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
    return t;
}

/// Plausible observation rows: entries in [0, 1] like the encoder's normalized features.
inline Tensor2 random_observations(Eigen::Index rows, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor2 t(rows, kObsWidth);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
    return t;
}

/// Parameter and input gradients of L = sum(C .* actor(obs)).
inline GradCheckReport check_actor_gradients(ActorNetwork& actor, int param_probes, int input_probes,
                                             std::mt19937_64& rng, Eigen::Index batch = 3) {
    Tensor2 obs = random_observations(batch, rng);
    const Tensor2 weights = random_matrix(batch, kActionWidth, rng);
    auto evaluate = [&]() -> Evaluation {
        const Tensor2 a = actor.forward(obs);
        return {a.cwiseProduct(weights).sum(), actor.relu_pattern()};
    };
    const Evaluation base = evaluate();
    auto params = actor.parameters();
    nn::zero_grads(params);
    const Tensor2 d_obs = actor.backward(weights);

    GradCheckReport report;
    std::vector<double*> targets;
    std::vector<double> analytic;
    for (nn::Parameter* p : params) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            targets.push_back(p->value.data() + i);
            analytic.push_back(p->grad.data()[i]);
        }
    }
    probe_entries(targets, analytic, evaluate, base.pattern, param_probes, rng, report);

    targets.clear();
    analytic.clear();
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        targets.push_back(obs.data() + i);
        analytic.push_back(d_obs.data()[i]);
    }
    probe_entries(targets, analytic, evaluate, base.pattern, input_probes, rng, report);
    return report;
}

/// Parameter, observation and action gradients of L = sum(c .* Q(obs, actions)).
inline GradCheckReport check_critic_gradients(SharedCritic& critic, int param_probes, int input_probes,
                                              std::mt19937_64& rng, Eigen::Index batch = 3) {
    const int n = critic.n_agents();
    std::vector<Tensor2> obs, actions;
    for (int u = 0; u < n; ++u) {
        obs.push_back(random_observations(batch, rng));
        actions.push_back(random_matrix(batch, kActionWidth, rng));
    }
    const Tensor2 weights = random_matrix(batch, 1, rng);
    auto evaluate = [&]() -> Evaluation {
        const Tensor2 q = critic.forward(obs, actions);
        return {q.cwiseProduct(weights).sum(), critic.relu_pattern()};
    };
    const Evaluation base = evaluate();
    auto params = critic.parameters();
    nn::zero_grads(params);
    const auto input_grads = critic.backward(weights);

    GradCheckReport report;
    std::vector<double*> targets;
    std::vector<double> analytic;
    for (nn::Parameter* p : params) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            targets.push_back(p->value.data() + i);
            analytic.push_back(p->grad.data()[i]);
        }
    }
    probe_entries(targets, analytic, evaluate, base.pattern, param_probes, rng, report);

    targets.clear();
    analytic.clear();
    for (int u = 0; u < n; ++u) {
        for (Eigen::Index i = 0; i < obs[u].size(); ++i) {
            targets.push_back(obs[u].data() + i);
            analytic.push_back(input_grads.d_obs[u].data()[i]);
        }
        for (Eigen::Index i = 0; i < actions[u].size(); ++i) {
            targets.push_back(actions[u].data() + i);
            analytic.push_back(input_grads.d_actions[u].data()[i]);
        }
    }
    probe_entries(targets, analytic, evaluate, base.pattern, input_probes, rng, report);
    return report;
}

/// Gradient of the actor-update loss -mean Q(o, a_1, .., mu_u(o_u), .., a_U) with respect to
/// actor u's parameters, through the critic. Runs one real update to obtain the analytic
/// gradient, then restores the actor's parameters before probing.
inline GradCheckReport check_actor_update_gradients(Maddpg& learner, const Batch& batch, int u, int probes,
                                                    std::mt19937_64& rng) {
    auto params = learner.actor(u).parameters();
    std::vector<Tensor2> before;
    for (auto* p : params) before.push_back(p->value);
    learner.actor_update(batch, u);
    std::vector<double> analytic;
    for (auto* p : params) analytic.insert(analytic.end(), p->grad.data(), p->grad.data() + p->grad.size());
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = before[i];

    auto evaluate = [&]() -> Evaluation {
        std::vector<Tensor2> actions = batch.actions;
        actions[u] = learner.actor(u).forward(batch.obs[u]);
        const Tensor2 q = learner.critic().forward(batch.obs, actions);
        // distinct odd multiplier keeps the two patterns from cancelling
        return {-q.mean(), learner.actor(u).relu_pattern() ^ (learner.critic().relu_pattern() * 0x9E3779B97F4A7C15ULL)};
    };
    const Evaluation base = evaluate();
    std::vector<double*> targets;
    for (auto* p : params) {
        for (Eigen::Index k = 0; k < p->value.size(); ++k) targets.push_back(p->value.data() + k);
    }
    GradCheckReport report;
    probe_entries(targets, analytic, evaluate, base.pattern, probes, rng, report);
    return report;
}

}  // namespace uavslice::testing
