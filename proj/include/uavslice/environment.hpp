#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavslice/channel.hpp"
#include "uavslice/config.hpp"

namespace uavslice {

inline constexpr int kObsWidth = 80;
inline constexpr int kActionWidth = 13;
inline constexpr int kLocalStateWidth = 67;
inline constexpr int kDaFeatureWidth = 7;
inline constexpr int kDaFeatureOffset = 4;
inline constexpr int kContextOffset = 67;

using Observation = std::array<double, kObsWidth>;

/// Movement direction [0:3], power level [3], bandwidth logits over the demand areas [4:13].
using AgentAction = std::array<double, kActionWidth>;

enum class DistanceLevel : int { Near = 0, Medium = 1, Far = 2 };

/// Demand areas are indexed slice-major: index = 3 * slice + level.
constexpr int da_index(Slice s, DistanceLevel l) {
    return static_cast<int>(s) * kNumDistanceLevels + static_cast<int>(l);
}

DistanceLevel distance_level(double horizontal_m, const ScenarioConfig& scenario);

struct UavState {
    int id = 0;
    Vec3 position;
    Vec3 previous_position;
    double tx_power_w = 0.0;
    double bw_budget_hz = 0.0;
    std::array<int, kNumDemandAreas> da_rbs{};
    std::array<double, kNumDemandAreas> da_bw_hz{};
    double moved_m = 0.0;
    double energy_last_step_j = 0.0;
};

struct UeMetrics {
    double sinr = 0.0;
    double interference_w = 0.0;
    double throughput_bps = 0.0;
    channel::DelayBreakdown delay;
    channel::ReliabilityResult reliability;
    double satisfaction = 0.0;
};

struct UeState {
    int id = 0;
    Vec3 position;
    Slice slice = Slice::eMBB;
    int serving_uav = -1;
    int previous_serving_uav = -1;
    bool handover = false;
    int da = -1;
    double allocated_bw_hz = 0.0;
    UeMetrics metrics;
};

struct DemandArea {
    int uav_id = 0;
    Slice slice = Slice::eMBB;
    DistanceLevel level = DistanceLevel::Near;
    std::vector<int> members;  // indices into World::ues
    double allocated_bw_hz = 0.0;
};

struct RewardBreakdown {
    double qos = 0.0;
    double energy = 0.0;
    double fairness = 0.0;
    double total = 0.0;
};

struct StepInfo {
    RewardBreakdown reward;
    std::array<double, kNumSlices> slice_satisfaction{};
    double mean_energy_j = 0.0;
    double jain_throughput = 0.0;
    int handovers = 0;
    int ue_count = 0;
};

struct World {
    std::vector<UavState> uavs;
    std::vector<UeState> ues;
    std::vector<std::array<DemandArea, kNumDemandAreas>> das;
    double previous_reward = 0.0;
    long t = 0;
    int next_ue_id = 0;
};

struct StepResult {
    std::vector<Observation> observations;
    RewardBreakdown reward;
    StepInfo info;
};

/// Explicit UE placement for hand-built scenarios.
struct UeSpec {
    Vec3 position;
    Slice slice = Slice::eMBB;
};

class ActionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---- large-timescale control --------------------------------------------------------------

/// Splits `total_rbs` whole resource blocks by the given fractions: floor each share, then
/// hand the remainder to the largest fractional parts (ties to the lower index).
std::array<int, kNumDemandAreas> quantize_bandwidth(std::span<const double, kNumDemandAreas> fractions,
                                                    int total_rbs);

void apply_joint_action(World& world, const ExperimentConfig& config,
                        std::span<const AgentAction> actions);

/// Strongest-received-power association (ties to the lowest UAV id), then DA formation.
void associate_and_form_das(World& world, const ExperimentConfig& config);

/// Equal per-DA split of bandwidth among members followed by per-UE link metrics.
void schedule_small_timescale(World& world, const ExperimentConfig& config);

// ---- reward engine ------------------------------------------------------------------------

double ue_satisfaction(double throughput_bps, double delay_s, double reliability,
                       const SliceProfile& profile);
double qos_component(const World& world, const ExperimentConfig& config);
double energy_penalty(const World& world, const UavConfig& uav);

/// Jain's index over `x`; defined as 1 when every entry is zero.
double fairness_index(std::span<const double> x);
double fairness_component(const World& world, const ExperimentConfig& config);

RewardBreakdown compose_reward(double qos, double energy, double fairness, const RewardWeights& w);

// ---- observation codec --------------------------------------------------------------------

Observation encode_observation(const World& world, const ExperimentConfig& config, int uav_id);
std::vector<double> build_global_state(const World& world, const ExperimentConfig& config);

// ---- constraint checker -------------------------------------------------------------------

struct ConstraintViolation {
    int uav_id = -1;
    std::string what;
};

std::vector<ConstraintViolation> check_constraints(const World& world, const ExperimentConfig& config);

/// Owns a world plus the randomness used for UE placement and churn.
class Environment {
public:
    explicit Environment(ExperimentConfig config);

    std::vector<Observation> reset(std::uint64_t seed);

    /// Deterministic hand-built world: UAVs at the given positions and power,
    /// uniform bandwidth, and exactly the listed UEs. Churn still follows config.
    std::vector<Observation> reset_with(std::span<const Vec3> uav_positions, double tx_power_w,
                                        std::span<const UeSpec> ues, std::uint64_t seed = 0);

    StepResult step(std::span<const AgentAction> actions);

    const World& world() const { return world_; }
    World& mutable_world() { return world_; }
    const ExperimentConfig& config() const { return config_; }
    int n_uavs() const { return static_cast<int>(world_.uavs.size()); }

    std::vector<Observation> observations() const;
    StepInfo last_info() const { return last_info_; }

private:
    UeState spawn_ue();
    void apply_churn();
    void refresh_links();
    StepInfo evaluate();

    ExperimentConfig config_;
    World world_;
    std::mt19937_64 rng_;
    std::vector<Vec3> hotspots_;
    StepInfo last_info_;
};

}  // namespace uavslice
