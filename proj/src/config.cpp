#include "uavslice/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace uavslice {

using json = nlohmann::json;

const char* slice_name(Slice s) {
    switch (s) {
        case Slice::eMBB: return "embb";
        case Slice::URLLC: return "urllc";
        case Slice::mMTC: return "mmtc";
    }
    return "?";
}

Vec3 ServiceBox::clamp(const Vec3& p) const {
    return {std::clamp(p.x, x_min, x_max), std::clamp(p.y, y_min, y_max),
            std::clamp(p.z, h_min, h_max)};
}

std::vector<Vec3> ScenarioConfig::resolved_spawns() const {
    if (!uav_spawns.empty()) return uav_spawns;
    std::vector<Vec3> out;
    const double h = 0.5 * (box.h_min + box.h_max);
    const double y = 0.5 * (box.y_min + box.y_max);
    for (int i = 0; i < n_uavs; ++i) {
        const double x = box.x_min + (i + 0.5) / n_uavs * (box.x_max - box.x_min);
        out.push_back({x, y, h});
    }
    return out;
}

std::array<SliceProfile, kNumSlices> ExperimentConfig::default_slices() {
    SliceProfile embb;
    embb.slice = Slice::eMBB;
    embb.t_min_bps = 10e6;
    embb.d_max_s = 0.100;
    embb.r_min = 0.95;
    embb.priority = 2.0;
    embb.w_throughput = 0.6;
    embb.w_delay = 0.2;
    embb.w_reliability = 0.2;
    embb.traffic = {12000.0, 200.0, 3.0, 1.5};

    SliceProfile urllc;
    urllc.slice = Slice::URLLC;
    urllc.t_min_bps = 1e6;
    urllc.d_max_s = 0.010;
    urllc.r_min = 0.999;
    urllc.priority = 3.0;
    urllc.w_throughput = 0.2;
    urllc.w_delay = 0.4;
    urllc.w_reliability = 0.4;
    urllc.traffic = {256.0, 100.0, 5.0, 1.5};

    SliceProfile mmtc;
    mmtc.slice = Slice::mMTC;
    mmtc.t_min_bps = 100e3;
    mmtc.d_max_s = 1.0;
    mmtc.r_min = 0.90;
    mmtc.priority = 1.0;
    mmtc.w_throughput = 0.5;
    mmtc.w_delay = 0.3;
    mmtc.w_reliability = 0.2;
    mmtc.traffic = {128.0, 1.0, 0.0, 1.5};

    return {embb, urllc, mmtc};
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

namespace {

struct Field {
    std::string key;
    std::function<json(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const json&)> set;
};

template <typename T>
Field scalar(std::string key, T ExperimentConfig::*group, auto member) {
    return Field{
        std::move(key),
        [group, member](const ExperimentConfig& c) { return json((c.*group).*member); },
        [group, member](ExperimentConfig& c, const json& v) {
            using V = std::remove_reference_t<decltype((c.*group).*member)>;
            if constexpr (std::is_same_v<V, bool>) {
                if (!v.is_boolean()) throw ConfigError("expected a boolean");
            } else if constexpr (std::is_same_v<V, std::string>) {
                if (!v.is_string()) throw ConfigError("expected a string");
            } else if constexpr (std::is_integral_v<V>) {
                if (!v.is_number_integer() && !v.is_number_unsigned()) {
                    throw ConfigError("expected an integer");
                }
            } else {
                if (!v.is_number()) throw ConfigError("expected a number");
            }
            (c.*group).*member = v.get<V>();
        }};
}

json vec3_list_to_json(const std::vector<Vec3>& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back(json::array({p.x, p.y, p.z}));
    return arr;
}

std::vector<Vec3> vec3_list_from_json(const json& v) {
    if (!v.is_array()) throw ConfigError("expected a list of [x, y, z] points");
    std::vector<Vec3> out;
    for (const auto& p : v) {
        if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
            !p[2].is_number()) {
            throw ConfigError("expected a list of [x, y, z] points");
        }
        out.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    return out;
}

std::vector<Field> build_fields() {
    using C = ExperimentConfig;
    std::vector<Field> f;

    auto box = [&](const char* key, double ServiceBox::*m) {
        f.push_back(Field{key, [m](const C& c) { return json(c.scenario.box.*m); },
                          [m](C& c, const json& v) {
                              if (!v.is_number()) throw ConfigError("expected a number");
                              c.scenario.box.*m = v.get<double>();
                          }});
    };
    box("scenario.x_min", &ServiceBox::x_min);
    box("scenario.x_max", &ServiceBox::x_max);
    box("scenario.y_min", &ServiceBox::y_min);
    box("scenario.y_max", &ServiceBox::y_max);
    box("scenario.h_min", &ServiceBox::h_min);
    box("scenario.h_max", &ServiceBox::h_max);

    f.push_back(scalar("scenario.n_uavs", &C::scenario, &ScenarioConfig::n_uavs));
    f.push_back(Field{"scenario.uav_spawns",
                      [](const C& c) { return vec3_list_to_json(c.scenario.uav_spawns); },
                      [](C& c, const json& v) { c.scenario.uav_spawns = vec3_list_from_json(v); }});
    f.push_back(scalar("scenario.ue_min", &C::scenario, &ScenarioConfig::ue_min));
    f.push_back(scalar("scenario.ue_max", &C::scenario, &ScenarioConfig::ue_max));
    f.push_back(scalar("scenario.ue_height", &C::scenario, &ScenarioConfig::ue_height_m));
    f.push_back(scalar("scenario.ue_process", &C::scenario, &ScenarioConfig::ue_process));
    f.push_back(scalar("scenario.hotspot_count", &C::scenario, &ScenarioConfig::hotspot_count));
    f.push_back(scalar("scenario.hotspot_sigma", &C::scenario, &ScenarioConfig::hotspot_sigma_m));
    for (int s = 0; s < kNumSlices; ++s) {
        const std::string name = std::string("scenario.mix_") + slice_name(static_cast<Slice>(s));
        f.push_back(Field{name, [s](const C& c) { return json(c.scenario.slice_mix[s]); },
                          [s](C& c, const json& v) {
                              if (!v.is_number()) throw ConfigError("expected a number");
                              c.scenario.slice_mix[s] = v.get<double>();
                          }});
    }
    f.push_back(scalar("scenario.churn_arrival_prob", &C::scenario,
                       &ScenarioConfig::churn_arrival_prob));
    f.push_back(scalar("scenario.churn_departure_prob", &C::scenario,
                       &ScenarioConfig::churn_departure_prob));
    f.push_back(scalar("scenario.near_edge", &C::scenario, &ScenarioConfig::near_edge_m));
    f.push_back(scalar("scenario.medium_edge", &C::scenario, &ScenarioConfig::medium_edge_m));
    f.push_back(scalar("scenario.area_of_interest", &C::scenario,
                       &ScenarioConfig::area_of_interest_m));

    f.push_back(scalar("channel.los_a", &C::channel, &channel::ChannelParams::los_a));
    f.push_back(scalar("channel.los_b", &C::channel, &channel::ChannelParams::los_b));
    f.push_back(scalar("channel.eta_los_db", &C::channel, &channel::ChannelParams::eta_los_db));
    f.push_back(scalar("channel.eta_nlos_db", &C::channel, &channel::ChannelParams::eta_nlos_db));
    f.push_back(scalar("channel.noise_psd", &C::channel,
                       &channel::ChannelParams::noise_psd_w_per_hz));
    f.push_back(scalar("channel.carrier_hz", &C::channel, &channel::ChannelParams::carrier_hz));
    f.push_back(scalar("channel.handover_s", &C::delay, &channel::DelayParams::handover_s));
    f.push_back(scalar("channel.processing_s", &C::delay, &channel::DelayParams::processing_s));
    f.push_back(scalar("channel.delay_ceiling_s", &C::delay, &channel::DelayParams::ceiling_s));
    f.push_back(scalar("channel.buffer_packets", &C::delay, &channel::DelayParams::buffer_packets));

    f.push_back(scalar("uav.p_min", &C::uav, &UavConfig::p_min_w));
    f.push_back(scalar("uav.p_max", &C::uav, &UavConfig::p_max_w));
    f.push_back(scalar("uav.bandwidth_hz", &C::uav, &UavConfig::bandwidth_hz));
    f.push_back(scalar("uav.resource_blocks", &C::uav, &UavConfig::resource_blocks));
    f.push_back(scalar("uav.beam_angle_deg", &C::uav, &UavConfig::beam_angle_deg));
    f.push_back(scalar("uav.v_max", &C::uav, &UavConfig::v_max_mps));
    f.push_back(scalar("uav.large_timescale_s", &C::uav, &UavConfig::large_timescale_s));
    f.push_back(scalar("uav.move_energy_j_per_m", &C::uav, &UavConfig::move_energy_j_per_m));

    for (int s = 0; s < kNumSlices; ++s) {
        const std::string p = std::string("slice.") + slice_name(static_cast<Slice>(s)) + ".";
        auto slice_field = [&](const std::string& key, auto getter) {
            f.push_back(Field{p + key,
                              [s, getter](const C& c) { return json(getter(c.slices[s])); },
                              [s, getter](C& c, const json& v) {
                                  if (!v.is_number()) throw ConfigError("expected a number");
                                  getter(c.slices[s]) = v.get<double>();
                              }});
        };
        slice_field("t_min", [](auto& sp) -> auto& { return sp.t_min_bps; });
        slice_field("d_max", [](auto& sp) -> auto& { return sp.d_max_s; });
        slice_field("r_min", [](auto& sp) -> auto& { return sp.r_min; });
        slice_field("priority", [](auto& sp) -> auto& { return sp.priority; });
        slice_field("w_throughput", [](auto& sp) -> auto& { return sp.w_throughput; });
        slice_field("w_delay", [](auto& sp) -> auto& { return sp.w_delay; });
        slice_field("w_reliability", [](auto& sp) -> auto& { return sp.w_reliability; });
        slice_field("packet_bits", [](auto& sp) -> auto& { return sp.traffic.packet_bits; });
        slice_field("arrival_rate", [](auto& sp) -> auto& { return sp.traffic.arrival_rate_pps; });
        slice_field("per_threshold_db", [](auto& sp) -> auto& { return sp.traffic.per_threshold_db; });
        slice_field("per_slope", [](auto& sp) -> auto& { return sp.traffic.per_slope_per_db; });
    }

    f.push_back(scalar("reward.alpha", &C::reward, &RewardWeights::alpha));
    f.push_back(scalar("reward.beta", &C::reward, &RewardWeights::beta));
    f.push_back(scalar("reward.gamma_f", &C::reward, &RewardWeights::gamma_f));

    f.push_back(scalar("learner.lr_actor", &C::learner, &LearnerConfig::lr_actor));
    f.push_back(scalar("learner.lr_critic", &C::learner, &LearnerConfig::lr_critic));
    f.push_back(scalar("learner.gamma_d", &C::learner, &LearnerConfig::gamma_d));
    f.push_back(scalar("learner.tau", &C::learner, &LearnerConfig::tau));
    f.push_back(scalar("learner.buffer_capacity", &C::learner, &LearnerConfig::buffer_capacity));
    f.push_back(scalar("learner.batch_size", &C::learner, &LearnerConfig::batch_size));
    f.push_back(scalar("learner.embed_dim", &C::learner, &LearnerConfig::embed_dim));
    f.push_back(scalar("learner.attention_heads", &C::learner, &LearnerConfig::attention_heads));
    f.push_back(scalar("learner.da_hidden", &C::learner, &LearnerConfig::da_hidden));
    f.push_back(scalar("learner.actor_hidden", &C::learner, &LearnerConfig::actor_hidden));
    f.push_back(Field{"learner.critic_trunk",
                      [](const C& c) { return json(c.learner.critic_trunk); },
                      [](C& c, const json& v) {
                          if (!v.is_array()) throw ConfigError("expected a list of integers");
                          std::vector<int> widths;
                          for (const auto& w : v) {
                              if (!w.is_number_integer()) {
                                  throw ConfigError("expected a list of integers");
                              }
                              widths.push_back(w.get<int>());
                          }
                          c.learner.critic_trunk = widths;
                      }});

    f.push_back(scalar("noise.sigma0", &C::noise, &NoiseConfig::sigma0));
    f.push_back(scalar("noise.rho", &C::noise, &NoiseConfig::rho));
    f.push_back(scalar("noise.sigma_min", &C::noise, &NoiseConfig::sigma_min));
    f.push_back(scalar("noise.reset_sigma", &C::noise, &NoiseConfig::reset_sigma));

    f.push_back(scalar("run.seed", &C::run, &RunConfig::seed));
    f.push_back(scalar("run.steps", &C::run, &RunConfig::steps));
    f.push_back(scalar("run.episode_length", &C::run, &RunConfig::episode_length));
    f.push_back(scalar("run.eval_every", &C::run, &RunConfig::eval_every));
    f.push_back(scalar("run.eval_episodes", &C::run, &RunConfig::eval_episodes));
    f.push_back(scalar("run.eval_rollout_steps", &C::run, &RunConfig::eval_rollout_steps));
    f.push_back(scalar("run.checkpoint_every", &C::run, &RunConfig::checkpoint_every));
    f.push_back(scalar("run.save_replay", &C::run, &RunConfig::save_replay));
    f.push_back(scalar("run.out_dir", &C::run, &RunConfig::out_dir));
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = build_fields();
    return f;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        // bare words are strings
        for (char ch : text) {
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' ||
                  ch == '/' || ch == '.')) {
                throw ConfigError("cannot parse value '" + text + "'");
            }
        }
        return json(text);
    }
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config validation: " + what);
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.push_back(f.key);
    return keys;
}

void set_value(ExperimentConfig& config, const std::string& key, const std::string& value_text) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    try {
        f->set(config, parse_value(trim(value_text)));
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    } catch (const json::exception& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

std::string get_value(const ExperimentConfig& config, const std::string& key) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    return f->get(config).dump();
}

ParseResult parse_config_text(const std::string& text) {
    ParseResult result;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        if (seen.contains(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                              "' (first set on line " + std::to_string(seen[key]) + ")");
        }
        seen[key] = line_no;
        try {
            set_value(result.config, key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    for (const auto& f : fields()) {
        if (!seen.contains(f.key)) result.defaulted_keys.push_back(f.key);
    }
    validate(result.config);
    return result;
}

ParseResult parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::vector<std::string> apply_env_overrides(ExperimentConfig& config) {
    std::vector<std::string> applied;
    for (const auto& f : fields()) {
        std::string name = "UAVSLICE_";
        for (char ch : f.key) {
            if (ch == '.') {
                name += "__";
            } else {
                name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            }
        }
        if (const char* v = std::getenv(name.c_str())) {
            set_value(config, f.key, v);
            applied.push_back(f.key);
        }
    }
    if (!applied.empty()) validate(config);
    return applied;
}

std::string serialize(const ExperimentConfig& config) {
    std::string out;
    for (const auto& f : fields()) {
        out += f.key + " = " + f.get(config).dump() + "\n";
    }
    return out;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& f : fields()) {
        if (f.key.starts_with("run.")) continue;
        const std::string line = f.key + "=" + f.get(config).dump() + ";";
        for (unsigned char ch : line) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

void validate(const ExperimentConfig& c) {
    const auto& b = c.scenario.box;
    require(b.x_min < b.x_max && b.y_min < b.y_max, "service box must have positive extent");
    require(b.h_min > 0.0 && b.h_min <= b.h_max, "altitude range must satisfy 0 < h_min <= h_max");
    require(c.scenario.ue_height_m >= 0.0 && c.scenario.ue_height_m < b.h_min,
            "UE height must lie below the minimum UAV altitude");
    require(c.scenario.n_uavs >= 1, "at least one UAV is required");
    require(c.scenario.uav_spawns.empty() ||
                static_cast<int>(c.scenario.uav_spawns.size()) == c.scenario.n_uavs,
            "uav_spawns must list exactly n_uavs points");
    for (const auto& p : c.scenario.uav_spawns) {
        require(b.contains(p), "every UAV spawn point must lie inside the service box");
    }
    require(c.scenario.ue_min >= 1 && c.scenario.ue_min <= c.scenario.ue_max,
            "UE range must satisfy 1 <= ue_min <= ue_max");
    require(c.scenario.ue_process == "uniform" || c.scenario.ue_process == "clustered",
            "ue_process must be 'uniform' or 'clustered'");
    require(c.scenario.hotspot_count >= 1 && c.scenario.hotspot_sigma_m > 0.0,
            "hotspot parameters must be positive");
    double mix = 0.0;
    for (double m : c.scenario.slice_mix) {
        require(m >= 0.0, "slice mix fractions must be non-negative");
        mix += m;
    }
    require(std::abs(mix - 1.0) <= 1e-9, "slice mix fractions must sum to 1");
    for (double p : {c.scenario.churn_arrival_prob, c.scenario.churn_departure_prob}) {
        require(p >= 0.0 && p <= 1.0, "churn probabilities must lie in [0, 1]");
    }
    require(c.scenario.near_edge_m > 0.0 && c.scenario.near_edge_m < c.scenario.medium_edge_m,
            "distance bands must satisfy 0 < near_edge < medium_edge");
    require(c.scenario.area_of_interest_m > 0.0, "area of interest must be positive");

    require(c.channel.los_a > 0.0 && c.channel.los_b > 0.0, "LoS sigmoid parameters must be positive");
    require(c.channel.eta_los_db <= c.channel.eta_nlos_db, "eta_los_db must not exceed eta_nlos_db");
    require(c.channel.noise_psd_w_per_hz > 0.0, "noise PSD must be positive");
    require(c.channel.carrier_hz > 0.0, "carrier frequency must be positive");
    require(c.delay.handover_s >= 0.0 && c.delay.processing_s >= 0.0,
            "delay constants must be non-negative");
    require(c.delay.ceiling_s > 0.0, "delay ceiling must be positive");
    require(c.delay.buffer_packets >= 1, "buffer must hold at least one packet");

    require(c.uav.p_min_w >= 0.0 && c.uav.p_min_w <= c.uav.p_max_w && c.uav.p_max_w > 0.0,
            "power range must satisfy 0 <= p_min <= p_max, p_max > 0");
    require(c.uav.bandwidth_hz > 0.0 && c.uav.resource_blocks >= 1,
            "bandwidth and resource block count must be positive");
    require(c.uav.beam_angle_deg > 0.0 && c.uav.beam_angle_deg < 90.0,
            "beam angle must lie in (0, 90) degrees");
    require(c.uav.v_max_mps >= 0.0 && c.uav.large_timescale_s > 0.0,
            "speed must be non-negative and timescale positive");
    require(c.uav.move_energy_j_per_m >= 0.0, "propulsion energy must be non-negative");
    require(c.uav.max_energy_j() > 0.0, "maximum per-step energy must be positive");

    for (const auto& s : c.slices) {
        const std::string n = slice_name(s.slice);
        require(s.t_min_bps > 0.0 && s.d_max_s > 0.0, n + ": t_min and d_max must be positive");
        require(s.r_min > 0.0 && s.r_min <= 1.0, n + ": r_min must lie in (0, 1]");
        require(s.priority > 0.0, n + ": priority weight must be positive");
        require(s.w_throughput >= 0.0 && s.w_delay >= 0.0 && s.w_reliability >= 0.0,
                n + ": satisfaction weights must be non-negative");
        require(std::abs(s.w_throughput + s.w_delay + s.w_reliability - 1.0) <= 1e-9,
                n + ": satisfaction weights must sum to 1");
        require(s.traffic.packet_bits > 0.0 && s.traffic.arrival_rate_pps >= 0.0,
                n + ": traffic parameters must be positive");
        require(s.traffic.per_slope_per_db > 0.0, n + ": PER slope must be positive");
    }

    require(c.reward.alpha >= 0.0 && c.reward.beta >= 0.0 && c.reward.gamma_f >= 0.0,
            "reward weights must be non-negative");

    const auto& l = c.learner;
    require(l.lr_actor > 0.0 && l.lr_critic > 0.0, "learning rates must be positive");
    require(l.gamma_d >= 0.0 && l.gamma_d < 1.0, "discount gamma_d must lie in [0, 1)");
    require(l.tau > 0.0 && l.tau <= 1.0, "soft update rate tau must lie in (0, 1]");
    require(l.batch_size >= 1 && l.buffer_capacity >= l.batch_size,
            "replay capacity must be at least the batch size");
    require(l.embed_dim >= 1 && l.attention_heads >= 1 && l.embed_dim % l.attention_heads == 0,
            "embed_dim must be divisible by attention_heads");
    require(l.da_hidden >= 1 && l.actor_hidden >= 1, "hidden widths must be positive");
    require(!l.critic_trunk.empty(), "critic trunk needs at least one hidden layer");
    for (int w : l.critic_trunk) require(w >= 1, "critic trunk widths must be positive");

    const auto& nz = c.noise;
    require(nz.sigma0 >= 0.0 && nz.sigma_min >= 0.0 && nz.reset_sigma >= 0.0,
            "noise scales must be non-negative");
    require(nz.rho > 0.0 && nz.rho < 1.0, "noise decay rho must lie in (0, 1)");

    const auto& r = c.run;
    require(r.steps >= 0, "run.steps must be non-negative");
    require(r.episode_length >= 1, "episode length must be positive");
    require(r.eval_every >= 0 && r.eval_episodes >= 0, "evaluation cadence must be non-negative");
    require(r.eval_rollout_steps >= 1, "evaluation rollout must have at least one step");
    require(r.checkpoint_every >= 0, "checkpoint cadence must be non-negative");
}

}  // namespace uavslice
