#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "uavslice/config.hpp"
#include "uavslice/environment.hpp"

namespace uavslice {

/// Independent sub-stream seed: a SplitMix64 mix of (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

namespace seed_stream {
inline constexpr std::uint64_t train_episode = 1;
inline constexpr std::uint64_t eval_episode = 2;
inline constexpr std::uint64_t policy = 3;
inline constexpr std::uint64_t learner = 4;
inline constexpr std::uint64_t init = 5;
}  // namespace seed_stream

/// Environment seeds of the evaluation episodes of a run; identical for every policy.
std::vector<std::uint64_t> eval_seeds(std::uint64_t run_seed, int count);

/// Joint action for every UAV given the current world and observations.
using JointPolicy = std::function<std::vector<AgentAction>(const Environment& env,
                                                           std::span<const Observation> obs,
                                                           std::mt19937_64& rng)>;

struct StepRecord {
    int episode = 0;
    int step = 0;
    std::uint64_t seed = 0;
    StepInfo info;
};

struct EpisodeSummary {
    int episode = 0;
    std::uint64_t seed = 0;
    int steps = 0;
    RewardBreakdown mean_reward;
    std::array<double, kNumSlices> mean_slice_satisfaction{};
    double mean_energy_j = 0.0;
    double mean_jain = 0.0;
};

/// Runs one episode per seed, each for `steps` steps. The policy's rng for episode k is
/// seeded from (seeds[k], policy stream) so a policy sees the same randomness on reruns.
std::vector<EpisodeSummary> run_episodes(const ExperimentConfig& config, const JointPolicy& policy,
                                         std::span<const std::uint64_t> seeds, int steps,
                                         const std::function<void(const StepRecord&)>& on_step = {});

/// Mean over episodes of the per-episode means.
EpisodeSummary average(std::span<const EpisodeSummary> episodes);

}  // namespace uavslice
