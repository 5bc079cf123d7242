#pragma once

#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "uavslice/config.hpp"
#include "uavslice/environment.hpp"

namespace uavslice::baselines {

enum class BaselineKind { random, coverage, qos };

std::optional<BaselineKind> parse_kind(std::string_view name);
const char* kind_name(BaselineKind kind);

/// Movement components uniform in [-1, 1], power level uniform in [0, 1],
/// bandwidth fractions from a symmetric Dirichlet(1) encoded as log-probabilities.
AgentAction random_action(std::mt19937_64& rng);

/// Flies toward the centroid of the UAV's assigned UEs at the altitude that puts the
/// farthest one inside the beam; power tracks altitude; far DAs get more bandwidth.
AgentAction coverage_greedy_action(const World& world, const ExperimentConfig& config, int uav_id);

/// Flies toward the priority-weighted UE centroid at a slice-preferred altitude;
/// power and bandwidth follow priority-weighted demand.
AgentAction qos_greedy_action(const World& world, const ExperimentConfig& config, int uav_id);

/// Action that holds position at minimum power with uniform bandwidth.
AgentAction idle_action();

class BaselinePolicy {
public:
    explicit BaselinePolicy(BaselineKind kind) : kind_(kind) {}
    AgentAction act(const World& world, const ExperimentConfig& config, int uav_id,
                    std::mt19937_64& rng) const;
    BaselineKind kind() const { return kind_; }

private:
    BaselineKind kind_;
};

}  // namespace uavslice::baselines
