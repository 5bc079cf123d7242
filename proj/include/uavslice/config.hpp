#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavslice/channel.hpp"
#include "uavslice/geometry.hpp"

namespace uavslice {

enum class Slice : int { eMBB = 0, URLLC = 1, mMTC = 2 };
inline constexpr int kNumSlices = 3;
inline constexpr int kNumDistanceLevels = 3;
inline constexpr int kNumDemandAreas = kNumSlices * kNumDistanceLevels;

const char* slice_name(Slice s);

/// QoS requirements, priority and satisfaction weights for one slice.
struct SliceProfile {
    Slice slice = Slice::eMBB;
    double t_min_bps = 10e6;
    double d_max_s = 0.100;
    double r_min = 0.95;
    double priority = 2.0;
    double w_throughput = 0.6;
    double w_delay = 0.2;
    double w_reliability = 0.2;
    channel::TrafficProfile traffic;
};

struct ServiceBox {
    double x_min = 0.0, x_max = 2000.0;
    double y_min = 0.0, y_max = 2000.0;
    double h_min = 100.0, h_max = 400.0;

    bool contains(const Vec3& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max && p.z >= h_min &&
               p.z <= h_max;
    }
    Vec3 clamp(const Vec3& p) const;
};

struct ScenarioConfig {
    ServiceBox box;
    int n_uavs = 3;
    /// Empty means evenly spaced spawn points along the box's horizontal midline.
    std::vector<Vec3> uav_spawns;
    int ue_min = 180;
    int ue_max = 300;
    double ue_height_m = 1.5;
    /// "uniform" or "clustered" (Gaussian hotspots).
    std::string ue_process = "uniform";
    int hotspot_count = 4;
    double hotspot_sigma_m = 150.0;
    std::array<double, kNumSlices> slice_mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double churn_arrival_prob = 0.1;
    double churn_departure_prob = 0.1;
    double near_edge_m = 300.0;
    double medium_edge_m = 600.0;
    double area_of_interest_m = 800.0;

    std::vector<Vec3> resolved_spawns() const;
};

struct UavConfig {
    double p_min_w = 0.0;
    double p_max_w = 10.0;
    double bandwidth_hz = 600e6;
    int resource_blocks = 1667;
    double beam_angle_deg = 60.0;
    double v_max_mps = 20.0;
    double large_timescale_s = 1.0;
    double move_energy_j_per_m = 20.0;

    double rb_bandwidth_hz() const { return bandwidth_hz / resource_blocks; }
    double max_step_m() const { return v_max_mps * large_timescale_s; }
    double max_energy_j() const {
        return p_max_w * large_timescale_s + move_energy_j_per_m * max_step_m();
    }
};

struct RewardWeights {
    double alpha = 2.0;
    double beta = 0.8;
    double gamma_f = 0.5;
};

struct LearnerConfig {
    double lr_actor = 1e-4;
    double lr_critic = 1e-3;
    double gamma_d = 0.99;
    double tau = 0.005;
    int buffer_capacity = 300000;
    int batch_size = 256;
    int embed_dim = 64;
    int attention_heads = 4;
    int da_hidden = 128;
    int actor_hidden = 128;
    std::vector<int> critic_trunk{512, 512, 256, 256, 128};
};

struct NoiseConfig {
    double sigma0 = 1.0;
    double rho = 0.981;
    double sigma_min = 0.005;
    double reset_sigma = 0.6;
};

struct RunConfig {
    std::uint64_t seed = 0;
    long steps = 100000;
    int episode_length = 200;
    int eval_every = 2000;
    int eval_episodes = 5;
    int eval_rollout_steps = 2000;
    int checkpoint_every = 10000;
    bool save_replay = false;
    std::string out_dir = "runs/default";
};

struct ExperimentConfig {
    ScenarioConfig scenario;
    channel::ChannelParams channel;
    channel::DelayParams delay;
    UavConfig uav;
    std::array<SliceProfile, kNumSlices> slices = default_slices();
    RewardWeights reward;
    LearnerConfig learner;
    NoiseConfig noise;
    RunConfig run;

    const SliceProfile& profile(Slice s) const { return slices[static_cast<int>(s)]; }

    static std::array<SliceProfile, kNumSlices> default_slices();
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raises ConfigError naming the first violated constraint.
void validate(const ExperimentConfig& config);

struct ParseResult {
    ExperimentConfig config;
    std::vector<std::string> defaulted_keys;
};

/// Parses the dotted `key = value` format. Unknown keys and malformed lines are
/// rejected with their line number; keys not present keep their defaults.
ParseResult parse_config_text(const std::string& text);
ParseResult parse_config_file(const std::filesystem::path& path);

/// Applies `UAVSLICE_<KEY>` environment overrides where the key's dots become `__`.
std::vector<std::string> apply_env_overrides(ExperimentConfig& config);

/// Canonical text form listing every key; parse_config_text(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);

void set_value(ExperimentConfig& config, const std::string& key, const std::string& value_text);
std::string get_value(const ExperimentConfig& config, const std::string& key);
std::vector<std::string> config_keys();

/// FNV-1a hash of the canonical serialization, excluding `run.*` keys.
std::uint64_t config_hash(const ExperimentConfig& config);

std::string format_double(double v);

}  // namespace uavslice
