#include "uavslice/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace uavslice::baselines {

namespace {

constexpr double kEmptyDaFloor = 1e-9;

AgentAction with_log_fractions(AgentAction a, const std::array<double, kNumDemandAreas>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    for (int d = 0; d < kNumDemandAreas; ++d) a[4 + d] = std::log(weights[d] / total);
    return a;
}

/// Movement action pointing at `target`, reaching it in one step when close enough.
void set_movement(AgentAction& a, const Vec3& from, const Vec3& target, const UavConfig& uav) {
    Vec3 dir = (target - from) * (1.0 / uav.max_step_m());
    const double n = dir.norm();
    if (n > 1.0) dir = dir * (1.0 / n);
    a[0] = dir.x;
    a[1] = dir.y;
    a[2] = dir.z;
}

std::vector<int> assigned_ues(const World& world, int uav_id) {
    std::vector<int> out;
    for (std::size_t i = 0; i < world.ues.size(); ++i) {
        if (world.ues[i].serving_uav == uav_id) out.push_back(static_cast<int>(i));
    }
    return out;
}

const UavState& find_uav(const World& world, int uav_id) {
    for (const auto& u : world.uavs) {
        if (u.id == uav_id) return u;
    }
    throw std::out_of_range("no UAV with id " + std::to_string(uav_id));
}

double slice_altitude_fraction(Slice s) {
    switch (s) {
        case Slice::URLLC: return 0.3;
        case Slice::mMTC: return 0.7;
        case Slice::eMBB: return 0.5;
    }
    return 0.5;
}

}  // namespace

std::optional<BaselineKind> parse_kind(std::string_view name) {
    if (name == "random") return BaselineKind::random;
    if (name == "coverage") return BaselineKind::coverage;
    if (name == "qos") return BaselineKind::qos;
    return std::nullopt;
}

const char* kind_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::random: return "random";
        case BaselineKind::coverage: return "coverage";
        case BaselineKind::qos: return "qos";
    }
    return "?";
}

AgentAction idle_action() {
    AgentAction a{};
    const double uniform = -std::log(static_cast<double>(kNumDemandAreas));
    for (int d = 0; d < kNumDemandAreas; ++d) a[4 + d] = uniform;
    return a;
}

AgentAction random_action(std::mt19937_64& rng) {
    AgentAction a{};
    std::uniform_real_distribution<double> signed_unit(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 3; ++i) a[i] = signed_unit(rng);
    a[3] = unit(rng);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::array<double, kNumDemandAreas> g{};
    for (auto& x : g) x = std::max(gamma(rng), 1e-300);
    return with_log_fractions(a, g);
}

AgentAction coverage_greedy_action(const World& world, const ExperimentConfig& config, int uav_id) {
    const UavState& uav = find_uav(world, uav_id);
    const auto members = assigned_ues(world, uav_id);
    if (members.empty()) return idle_action();

    const ServiceBox& box = config.scenario.box;
    double cx = 0.0, cy = 0.0;
    for (int i : members) {
        cx += world.ues[i].position.x;
        cy += world.ues[i].position.y;
    }
    cx /= static_cast<double>(members.size());
    cy /= static_cast<double>(members.size());
    double d_max = 0.0;
    for (int i : members) {
        d_max = std::max(d_max, std::hypot(world.ues[i].position.x - cx, world.ues[i].position.y - cy));
    }
    const double beam = config.uav.beam_angle_deg * std::numbers::pi / 180.0;
    const double altitude = std::clamp(1.1 * d_max / std::tan(beam), box.h_min, box.h_max);
    const Vec3 target = box.clamp({cx, cy, altitude});

    AgentAction a{};
    set_movement(a, uav.position, target, config.uav);
    a[3] = (altitude - box.h_min) / (box.h_max - box.h_min);
    std::array<double, kNumDemandAreas> w{};
    for (int s = 0; s < kNumSlices; ++s) {
        for (int l = 0; l < kNumDistanceLevels; ++l) w[s * kNumDistanceLevels + l] = 1.0 + l;
    }
    return with_log_fractions(a, w);
}

AgentAction qos_greedy_action(const World& world, const ExperimentConfig& config, int uav_id) {
    const UavState& uav = find_uav(world, uav_id);
    const auto members = assigned_ues(world, uav_id);
    if (members.empty()) return idle_action();

    const ServiceBox& box = config.scenario.box;
    double wsum = 0.0, cx = 0.0, cy = 0.0, h = 0.0;
    for (int i : members) {
        const UeState& ue = world.ues[i];
        const double w = config.profile(ue.slice).priority;
        wsum += w;
        cx += w * ue.position.x;
        cy += w * ue.position.y;
        h += w * (box.h_min + slice_altitude_fraction(ue.slice) * (box.h_max - box.h_min));
    }
    const Vec3 target = box.clamp({cx / wsum, cy / wsum, h / wsum});

    AgentAction a{};
    set_movement(a, uav.position, target, config.uav);

    // power saturates once this UAV carries its even share of a full URLLC-weighted population
    const double full_load = config.profile(Slice::URLLC).priority * config.scenario.ue_max /
                             static_cast<double>(std::max(1, config.scenario.n_uavs));
    a[3] = std::min(1.0, wsum / full_load);

    std::array<double, kNumDemandAreas> demand{};
    demand.fill(kEmptyDaFloor);
    for (int i : members) {
        const UeState& ue = world.ues[i];
        if (ue.da >= 0) demand[ue.da] += config.profile(ue.slice).priority;
    }
    return with_log_fractions(a, demand);
}

AgentAction BaselinePolicy::act(const World& world, const ExperimentConfig& config, int uav_id,
                                std::mt19937_64& rng) const {
    switch (kind_) {
        case BaselineKind::random: return random_action(rng);
        case BaselineKind::coverage: return coverage_greedy_action(world, config, uav_id);
        case BaselineKind::qos: return qos_greedy_action(world, config, uav_id);
    }
    return idle_action();
}

}  // namespace uavslice::baselines
