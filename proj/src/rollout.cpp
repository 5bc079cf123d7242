#include "uavslice/rollout.hpp"

namespace uavslice {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void accumulate(EpisodeSummary& acc, const StepInfo& info) {
    acc.mean_reward.qos += info.reward.qos;
    acc.mean_reward.energy += info.reward.energy;
    acc.mean_reward.fairness += info.reward.fairness;
    acc.mean_reward.total += info.reward.total;
    for (int s = 0; s < kNumSlices; ++s) acc.mean_slice_satisfaction[s] += info.slice_satisfaction[s];
    acc.mean_energy_j += info.mean_energy_j;
    acc.mean_jain += info.jain_throughput;
}

void scale(EpisodeSummary& acc, double k) {
    acc.mean_reward.qos *= k;
    acc.mean_reward.energy *= k;
    acc.mean_reward.fairness *= k;
    acc.mean_reward.total *= k;
    for (auto& s : acc.mean_slice_satisfaction) s *= k;
    acc.mean_energy_j *= k;
    acc.mean_jain *= k;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(base) ^ stream) + index);
}

std::vector<std::uint64_t> eval_seeds(std::uint64_t run_seed, int count) {
    std::vector<std::uint64_t> out;
    for (int k = 0; k < count; ++k) out.push_back(derive_seed(run_seed, seed_stream::eval_episode, k));
    return out;
}

std::vector<EpisodeSummary> run_episodes(const ExperimentConfig& config, const JointPolicy& policy,
                                         std::span<const std::uint64_t> seeds, int steps,
                                         const std::function<void(const StepRecord&)>& on_step) {
    std::vector<EpisodeSummary> out;
    Environment env(config);
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        std::vector<Observation> obs = env.reset(seeds[k]);
        std::mt19937_64 rng(derive_seed(seeds[k], seed_stream::policy, 0));
        EpisodeSummary acc;
        acc.episode = static_cast<int>(k);
        acc.seed = seeds[k];
        acc.steps = steps;
        for (int t = 0; t < steps; ++t) {
            const auto actions = policy(env, obs, rng);
            StepResult r = env.step(actions);
            accumulate(acc, r.info);
            if (on_step) on_step(StepRecord{static_cast<int>(k), t, seeds[k], r.info});
            obs = std::move(r.observations);
        }
        if (steps > 0) scale(acc, 1.0 / steps);
        out.push_back(acc);
    }
    return out;
}

EpisodeSummary average(std::span<const EpisodeSummary> episodes) {
    EpisodeSummary acc;
    for (const auto& e : episodes) {
        StepInfo as_info;
        as_info.reward = e.mean_reward;
        as_info.slice_satisfaction = e.mean_slice_satisfaction;
        as_info.mean_energy_j = e.mean_energy_j;
        as_info.jain_throughput = e.mean_jain;
        accumulate(acc, as_info);
        acc.steps += e.steps;
    }
    if (!episodes.empty()) scale(acc, 1.0 / static_cast<double>(episodes.size()));
    return acc;
}

}  // namespace uavslice
