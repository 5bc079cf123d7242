#include "uavslice/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uavslice/nn.hpp"

namespace uavslice {

DistanceLevel distance_level(double horizontal_m, const ScenarioConfig& scenario) {
    if (horizontal_m < scenario.near_edge_m) return DistanceLevel::Near;
    if (horizontal_m < scenario.medium_edge_m) return DistanceLevel::Medium;
    return DistanceLevel::Far;
}

std::array<int, kNumDemandAreas> quantize_bandwidth(std::span<const double, kNumDemandAreas> fractions,
                                                    int total_rbs) {
    std::array<int, kNumDemandAreas> rbs{};
    std::array<double, kNumDemandAreas> frac_part{};
    long assigned = 0;
    for (int d = 0; d < kNumDemandAreas; ++d) {
        const double share = std::max(0.0, fractions[d]) * total_rbs;
        const double whole = std::floor(share);
        rbs[d] = static_cast<int>(whole);
        frac_part[d] = share - whole;
        assigned += rbs[d];
    }
    std::array<int, kNumDemandAreas> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac_part[a] > frac_part[b]; });
    long remainder = total_rbs - assigned;
    for (int i = 0; remainder > 0; i = (i + 1) % kNumDemandAreas, --remainder) {
        ++rbs[order[i]];
    }
    // Fractions summing above one by rounding: take blocks back from the smallest parts.
    for (int i = kNumDemandAreas - 1; remainder < 0; i = (i + kNumDemandAreas - 1) % kNumDemandAreas) {
        if (rbs[order[i]] > 0) {
            --rbs[order[i]];
            ++remainder;
        }
    }
    return rbs;
}

namespace {

void validate_actions(const World& world, std::span<const AgentAction> actions) {
    if (actions.size() != world.uavs.size()) {
        throw ActionError("apply_joint_action: expected " + std::to_string(world.uavs.size()) +
                          " actions, got " + std::to_string(actions.size()));
    }
    for (std::size_t u = 0; u < actions.size(); ++u) {
        for (double v : actions[u]) {
            if (!std::isfinite(v)) {
                throw ActionError("apply_joint_action: non-finite entry in action of UAV " +
                                  std::to_string(u));
            }
        }
    }
}

}  // namespace

void apply_joint_action(World& world, const ExperimentConfig& config,
                        std::span<const AgentAction> actions) {
    validate_actions(world, actions);
    const auto& uc = config.uav;
    const double max_step = uc.max_step_m();
    for (std::size_t u = 0; u < actions.size(); ++u) {
        const AgentAction& a = actions[u];
        UavState& uav = world.uavs[u];

        Vec3 disp = Vec3{a[0], a[1], a[2]} * max_step;
        const double norm = disp.norm();
        if (norm > max_step) disp = disp * (max_step / norm);
        uav.previous_position = uav.position;
        uav.position = config.scenario.box.clamp(uav.position + disp);
        uav.moved_m = (uav.position - uav.previous_position).norm();

        const double level = std::clamp(a[3], 0.0, 1.0);
        uav.tx_power_w = std::clamp(uc.p_min_w + level * (uc.p_max_w - uc.p_min_w), uc.p_min_w,
                                    uc.p_max_w);

        std::array<double, kNumDemandAreas> logits{};
        std::copy(a.begin() + 4, a.end(), logits.begin());
        const auto fractions = nn::softmax(logits);
        std::array<double, kNumDemandAreas> frac{};
        std::copy(fractions.begin(), fractions.end(), frac.begin());
        uav.da_rbs = quantize_bandwidth(frac, uc.resource_blocks);
        for (int d = 0; d < kNumDemandAreas; ++d) {
            uav.da_bw_hz[d] = uav.da_rbs[d] * uc.rb_bandwidth_hz();
        }

        uav.energy_last_step_j =
            uav.tx_power_w * uc.large_timescale_s + uc.move_energy_j_per_m * uav.moved_m;
    }
}

void associate_and_form_das(World& world, const ExperimentConfig& config) {
    const double wavelength = config.channel.wavelength();
    const int n_uavs = static_cast<int>(world.uavs.size());

    world.das.assign(n_uavs, {});
    for (int u = 0; u < n_uavs; ++u) {
        for (int s = 0; s < kNumSlices; ++s) {
            for (int l = 0; l < kNumDistanceLevels; ++l) {
                DemandArea& da = world.das[u][da_index(static_cast<Slice>(s), static_cast<DistanceLevel>(l))];
                da.uav_id = u;
                da.slice = static_cast<Slice>(s);
                da.level = static_cast<DistanceLevel>(l);
                da.allocated_bw_hz = world.uavs[u].da_bw_hz[da_index(da.slice, da.level)];
            }
        }
    }

    for (std::size_t e = 0; e < world.ues.size(); ++e) {
        UeState& ue = world.ues[e];
        int best = 0;
        double best_power = -1.0;
        for (int u = 0; u < n_uavs; ++u) {
            const auto g = channel::LinkGeometry::between(world.uavs[u].position, ue.position, wavelength);
            const double prx =
                channel::received_power_w(world.uavs[u].tx_power_w, channel::path_loss_db(g, config.channel));
            if (prx > best_power) {
                best_power = prx;
                best = u;
            }
        }
        ue.previous_serving_uav = ue.serving_uav;
        ue.serving_uav = best;
        ue.handover = ue.previous_serving_uav >= 0 && ue.previous_serving_uav != best;

        const double horiz = horizontal_distance(world.uavs[best].position, ue.position);
        ue.da = da_index(ue.slice, distance_level(horiz, config.scenario));
        world.das[best][ue.da].members.push_back(static_cast<int>(e));
    }
}

double ue_satisfaction(double throughput, double delay_s, double reliability_value,
                       const SliceProfile& p) {
    const double t_term = std::min(throughput / p.t_min_bps, 1.0);
    const double r_term = std::min(reliability_value / p.r_min, 1.0);
    const double d_term = std::min(1.0, std::exp((p.d_max_s - delay_s) / p.d_max_s));
    return p.w_throughput * t_term + p.w_reliability * r_term + p.w_delay * d_term;
}

void schedule_small_timescale(World& world, const ExperimentConfig& config) {
    const double wavelength = config.channel.wavelength();
    const int n_uavs = static_cast<int>(world.uavs.size());

    std::vector<channel::Emitter> emitters(n_uavs);
    for (int u = 0; u < n_uavs; ++u) {
        for (DemandArea& da : world.das[u]) {
            const auto n = static_cast<double>(da.members.size());
            if (da.members.empty()) continue;
            // time-averaged Round-Robin: equal shares, rounded down so the shares never
            // add up to more than the DA allocation
            double share = da.allocated_bw_hz / n;
            auto summed = [&](double s) {
                double total = 0.0;
                for (std::size_t i = 0; i < da.members.size(); ++i) total += s;
                return total;
            };
            while (share > 0.0 && summed(share) > da.allocated_bw_hz) {
                share = std::nextafter(share, 0.0);
            }
            for (int idx : da.members) {
                UeState& ue = world.ues[idx];
                ue.allocated_bw_hz = share;
                const SliceProfile& prof = config.profile(ue.slice);

                double interference = 0.0;
                for (int v = 0; v < n_uavs; ++v) {
                    emitters[v].tx_power_w = world.uavs[v].tx_power_w;
                    emitters[v].geometry =
                        channel::LinkGeometry::between(world.uavs[v].position, ue.position, wavelength);
                    if (v != u) {
                        interference += channel::received_power_w(
                            emitters[v].tx_power_w, channel::path_loss_db(emitters[v].geometry, config.channel));
                    }
                }

                UeMetrics m;
                m.interference_w = interference;
                if (share > 0.0) {
                    m.sinr = channel::sinr(emitters, static_cast<std::size_t>(u), share, config.channel);
                }
                m.throughput_bps = channel::throughput_bps(share, m.sinr);
                const double per =
                    channel::per_from_sinr(channel::linear_to_db(m.sinr), prof.traffic);
                m.delay = channel::delay_total(emitters[u].geometry.distance_3d, m.throughput_bps, per,
                                               prof.traffic, ue.handover, config.delay);
                m.reliability = channel::reliability(
                    per, channel::drop_probability(m.delay.utilization, config.delay.buffer_packets));
                m.satisfaction =
                    ue_satisfaction(m.throughput_bps, m.delay.total_s, m.reliability.reliability, prof);
                ue.metrics = m;
            }
        }
    }
}

double qos_component(const World& world, const ExperimentConfig& config) {
    double num = 0.0;
    double den = 0.0;
    for (const UeState& ue : world.ues) {
        const double w = config.profile(ue.slice).priority;
        num += w * ue.metrics.satisfaction;
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

double energy_penalty(const World& world, const UavConfig& uav) {
    if (world.uavs.empty()) return 0.0;
    const double e_max = uav.max_energy_j();
    double sum = 0.0;
    for (const UavState& u : world.uavs) sum += u.energy_last_step_j / e_max;
    return std::clamp(sum / static_cast<double>(world.uavs.size()), 0.0, 1.0);
}

double fairness_index(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("fairness_index: needs at least one entry");
    const double peak = *std::max_element(x.begin(), x.end());
    if (peak <= 0.0) return 1.0;
    // Jain is scale-invariant; dividing by the peak makes equal and one-hot inputs exact
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double v : x) {
        const double y = v / peak;
        sum += y;
        sum_sq += y * y;
    }
    return std::clamp(sum * sum / (static_cast<double>(x.size()) * sum_sq), 0.0, 1.0);
}

double fairness_component(const World& world, const ExperimentConfig& config) {
    std::vector<double> x;
    x.reserve(world.ues.size());
    for (const UeState& ue : world.ues) {
        x.push_back(std::min(ue.metrics.throughput_bps / config.profile(ue.slice).t_min_bps, 1.0));
    }
    return fairness_index(x);
}

RewardBreakdown compose_reward(double qos, double energy, double fairness, const RewardWeights& w) {
    return {qos, energy, fairness, w.alpha * qos - w.beta * energy + w.gamma_f * fairness};
}

Observation encode_observation(const World& world, const ExperimentConfig& config, int uav_id) {
    Observation obs{};
    const UavState& uav = world.uavs.at(uav_id);
    const auto& box = config.scenario.box;
    const auto& uc = config.uav;

    obs[0] = (uav.position.x - box.x_min) / (box.x_max - box.x_min);
    obs[1] = (uav.position.y - box.y_min) / (box.y_max - box.y_min);
    obs[2] = box.h_max > box.h_min ? (uav.position.z - box.h_min) / (box.h_max - box.h_min) : 0.0;
    obs[3] = uc.p_max_w > uc.p_min_w ? (uav.tx_power_w - uc.p_min_w) / (uc.p_max_w - uc.p_min_w) : 0.0;

    const auto& das = world.das.at(uav_id);
    for (int d = 0; d < kNumDemandAreas; ++d) {
        const DemandArea& da = das[d];
        double* f = obs.data() + kDaFeatureOffset + d * kDaFeatureWidth;
        f[0] = std::min(2.0, static_cast<double>(da.members.size()) / 50.0);
        f[1 + static_cast<int>(da.slice)] = 1.0;
        f[4] = static_cast<double>(uav.da_rbs[d]) / uc.resource_blocks;
        f[5] = static_cast<double>(static_cast<int>(da.level)) / 2.0;
        double sat = 0.0;
        for (int idx : da.members) sat += world.ues[idx].metrics.satisfaction;
        f[6] = da.members.empty() ? 0.0 : sat / static_cast<double>(da.members.size());
    }

    // cardinal sectors: 0 north, 1 east, 2 south, 3 west
    auto sector = [](double dx, double dy) {
        if (std::abs(dy) >= std::abs(dx)) return dy >= 0.0 ? 0 : 2;
        return dx > 0.0 ? 1 : 3;
    };
    const double radius = config.scenario.area_of_interest_m;
    std::array<double, 4> ue_counts{};
    for (const UeState& ue : world.ues) {
        const double dx = ue.position.x - uav.position.x;
        const double dy = ue.position.y - uav.position.y;
        if (std::hypot(dx, dy) <= radius) ue_counts[sector(dx, dy)] += 1.0;
    }
    std::array<double, 4> uav_counts{};
    for (const UavState& other : world.uavs) {
        if (other.id == uav.id) continue;
        const double dx = other.position.x - uav.position.x;
        const double dy = other.position.y - uav.position.y;
        if (std::hypot(dx, dy) <= radius) uav_counts[sector(dx, dy)] += 1.0;
    }
    const double ue_total = std::max<double>(1.0, static_cast<double>(world.ues.size()));
    const double neighbor_total = std::max<double>(1.0, static_cast<double>(world.uavs.size()) - 1.0);
    for (int k = 0; k < 4; ++k) {
        obs[kContextOffset + k] = ue_counts[k] / ue_total;
        obs[kContextOffset + 4 + k] = uav_counts[k] / neighbor_total;
    }

    double sinr_db_sum = 0.0;
    double interference_sum = 0.0;
    double satisfied = 0.0;
    double utilization_sum = 0.0;
    int members = 0;
    for (const DemandArea& da : das) {
        for (int idx : da.members) {
            const UeMetrics& m = world.ues[idx].metrics;
            const double sinr_db = m.sinr > 0.0 ? channel::linear_to_db(m.sinr) : -50.0;
            sinr_db_sum += std::clamp(sinr_db, -50.0, 50.0);
            interference_sum += m.interference_w;
            satisfied += m.satisfaction >= 0.5 ? 1.0 : 0.0;
            utilization_sum += std::min(1.0, m.delay.utilization);
            ++members;
        }
    }
    if (members > 0) {
        const double n = members;
        obs[75] = sinr_db_sum / n / 50.0;
        const double mean_i = interference_sum / n;
        obs[76] = mean_i > 0.0 ? std::clamp((channel::linear_to_db(mean_i) + 150.0) / 100.0, 0.0, 1.0)
                               : 0.0;
        obs[77] = satisfied / n;
        obs[78] = utilization_sum / n;
    }
    const double reward_scale = config.reward.alpha + config.reward.gamma_f;
    obs[79] = reward_scale > 0.0 ? std::clamp(world.previous_reward / reward_scale, -1.0, 1.0) : 0.0;
    return obs;
}

std::vector<double> build_global_state(const World& world, const ExperimentConfig& config) {
    std::vector<double> state;
    state.reserve(world.uavs.size() * kLocalStateWidth);
    for (int u = 0; u < static_cast<int>(world.uavs.size()); ++u) {
        const Observation obs = encode_observation(world, config, u);
        state.insert(state.end(), obs.begin(), obs.begin() + kLocalStateWidth);
    }
    return state;
}

std::vector<ConstraintViolation> check_constraints(const World& world, const ExperimentConfig& config) {
    std::vector<ConstraintViolation> out;
    const auto& uc = config.uav;
    const double max_step = uc.max_step_m();
    for (const UavState& uav : world.uavs) {
        long rb_sum = 0;
        double bw_sum = 0.0;
        for (int d = 0; d < kNumDemandAreas; ++d) {
            if (uav.da_rbs[d] < 0) out.push_back({uav.id, "negative RB count"});
            rb_sum += uav.da_rbs[d];
            bw_sum += uav.da_bw_hz[d];
        }
        if (rb_sum != uc.resource_blocks) {
            out.push_back({uav.id, "RB total " + std::to_string(rb_sum) + " != " +
                                       std::to_string(uc.resource_blocks)});
        }
        if (bw_sum > uav.bw_budget_hz * (1.0 + 1e-12)) {
            out.push_back({uav.id, "bandwidth budget exceeded"});
        }
        if ((uav.position - uav.previous_position).norm() > max_step * (1.0 + 1e-12)) {
            out.push_back({uav.id, "speed limit exceeded"});
        }
        if (!config.scenario.box.contains(uav.position)) {
            out.push_back({uav.id, "position outside the service box"});
        }
        if (uav.tx_power_w < uc.p_min_w || uav.tx_power_w > uc.p_max_w) {
            out.push_back({uav.id, "transmit power outside [p_min, p_max]"});
        }
    }
    for (const auto& das : world.das) {
        for (const DemandArea& da : das) {
            double used = 0.0;
            for (int idx : da.members) used += world.ues[idx].allocated_bw_hz;
            if (used > da.allocated_bw_hz) {
                out.push_back({da.uav_id, "DA member shares exceed the DA allocation"});
            }
        }
    }
    return out;
}

// ---- Environment --------------------------------------------------------------------------

Environment::Environment(ExperimentConfig config) : config_(std::move(config)) {
    validate(config_);
}

UeState Environment::spawn_ue() {
    const auto& sc = config_.scenario;
    const auto& box = sc.box;
    UeState ue;
    ue.id = world_.next_ue_id++;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = unit(rng_);
    double acc = 0.0;
    int slice = kNumSlices - 1;
    for (int s = 0; s < kNumSlices; ++s) {
        acc += sc.slice_mix[s];
        if (r < acc) {
            slice = s;
            break;
        }
    }
    ue.slice = static_cast<Slice>(slice);

    if (sc.ue_process == "clustered" && !hotspots_.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, hotspots_.size() - 1);
        std::normal_distribution<double> jitter(0.0, sc.hotspot_sigma_m);
        const Vec3& c = hotspots_[pick(rng_)];
        const double x = c.x + jitter(rng_);
        const double y = c.y + jitter(rng_);
        ue.position = {std::clamp(x, box.x_min, box.x_max), std::clamp(y, box.y_min, box.y_max),
                       sc.ue_height_m};
    } else {
        std::uniform_real_distribution<double> ux(box.x_min, box.x_max);
        std::uniform_real_distribution<double> uy(box.y_min, box.y_max);
        const double x = ux(rng_);
        const double y = uy(rng_);
        ue.position = {x, y, sc.ue_height_m};
    }
    return ue;
}

namespace {

void init_uavs(World& world, const ExperimentConfig& config, std::span<const Vec3> positions,
               double tx_power_w) {
    const auto& uc = config.uav;
    world.uavs.clear();
    std::array<double, kNumDemandAreas> uniform{};
    uniform.fill(1.0 / kNumDemandAreas);
    const auto rbs = quantize_bandwidth(uniform, uc.resource_blocks);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        UavState u;
        u.id = static_cast<int>(i);
        u.position = positions[i];
        u.previous_position = positions[i];
        u.tx_power_w = tx_power_w;
        u.bw_budget_hz = uc.bandwidth_hz;
        u.da_rbs = rbs;
        for (int d = 0; d < kNumDemandAreas; ++d) u.da_bw_hz[d] = rbs[d] * uc.rb_bandwidth_hz();
        u.energy_last_step_j = 0.0;
        world.uavs.push_back(u);
    }
}

}  // namespace

std::vector<Observation> Environment::reset(std::uint64_t seed) {
    rng_.seed(seed);
    world_ = World{};
    const auto& sc = config_.scenario;

    hotspots_.clear();
    if (sc.ue_process == "clustered") {
        std::uniform_real_distribution<double> ux(sc.box.x_min, sc.box.x_max);
        std::uniform_real_distribution<double> uy(sc.box.y_min, sc.box.y_max);
        for (int k = 0; k < sc.hotspot_count; ++k) {
            const double x = ux(rng_);
            const double y = uy(rng_);
            hotspots_.push_back({x, y, 0.0});
        }
    }

    const auto spawns = sc.resolved_spawns();
    init_uavs(world_, config_, spawns, 0.5 * (config_.uav.p_min_w + config_.uav.p_max_w));

    std::uniform_int_distribution<int> count(sc.ue_min, sc.ue_max);
    const int n = count(rng_);
    for (int i = 0; i < n; ++i) world_.ues.push_back(spawn_ue());

    refresh_links();
    last_info_ = evaluate();
    return observations();
}

std::vector<Observation> Environment::reset_with(std::span<const Vec3> uav_positions, double tx_power_w,
                                                 std::span<const UeSpec> ues, std::uint64_t seed) {
    if (uav_positions.empty()) throw std::invalid_argument("reset_with: at least one UAV is required");
    if (ues.empty()) throw std::invalid_argument("reset_with: at least one UE is required");
    for (const Vec3& p : uav_positions) {
        if (!config_.scenario.box.contains(p)) {
            throw std::invalid_argument("reset_with: UAV position outside the service box");
        }
    }
    if (tx_power_w < config_.uav.p_min_w || tx_power_w > config_.uav.p_max_w) {
        throw std::invalid_argument("reset_with: transmit power outside [p_min, p_max]");
    }
    rng_.seed(seed);
    world_ = World{};
    hotspots_.clear();
    init_uavs(world_, config_, uav_positions, tx_power_w);
    for (const UeSpec& spec : ues) {
        UeState ue;
        ue.id = world_.next_ue_id++;
        ue.position = spec.position;
        ue.slice = spec.slice;
        world_.ues.push_back(ue);
    }
    refresh_links();
    last_info_ = evaluate();
    return observations();
}

void Environment::apply_churn() {
    const auto& sc = config_.scenario;
    std::bernoulli_distribution depart(sc.churn_departure_prob);
    std::bernoulli_distribution arrive(sc.churn_arrival_prob);
    const bool leaving = depart(rng_);
    const bool joining = arrive(rng_);
    if (leaving && static_cast<int>(world_.ues.size()) > sc.ue_min) {
        std::uniform_int_distribution<std::size_t> pick(0, world_.ues.size() - 1);
        world_.ues.erase(world_.ues.begin() + static_cast<std::ptrdiff_t>(pick(rng_)));
    }
    if (joining && static_cast<int>(world_.ues.size()) < sc.ue_max) {
        world_.ues.push_back(spawn_ue());
    }
}

void Environment::refresh_links() {
    associate_and_form_das(world_, config_);
    schedule_small_timescale(world_, config_);
}

StepInfo Environment::evaluate() {
    StepInfo info;
    info.reward = compose_reward(qos_component(world_, config_), energy_penalty(world_, config_.uav),
                                 fairness_component(world_, config_), config_.reward);
    std::array<double, kNumSlices> sat{};
    std::array<int, kNumSlices> count{};
    std::vector<double> throughput;
    throughput.reserve(world_.ues.size());
    for (const UeState& ue : world_.ues) {
        sat[static_cast<int>(ue.slice)] += ue.metrics.satisfaction;
        ++count[static_cast<int>(ue.slice)];
        throughput.push_back(ue.metrics.throughput_bps);
        info.handovers += ue.handover ? 1 : 0;
    }
    for (int s = 0; s < kNumSlices; ++s) {
        info.slice_satisfaction[s] = count[s] > 0 ? sat[s] / count[s] : 0.0;
    }
    double energy = 0.0;
    for (const UavState& u : world_.uavs) energy += u.energy_last_step_j;
    info.mean_energy_j = world_.uavs.empty() ? 0.0 : energy / static_cast<double>(world_.uavs.size());
    info.jain_throughput = throughput.empty() ? 1.0 : fairness_index(throughput);
    info.ue_count = static_cast<int>(world_.ues.size());
    return info;
}

StepResult Environment::step(std::span<const AgentAction> actions) {
    if (world_.uavs.empty()) throw std::logic_error("Environment::step called before reset");
    validate_actions(world_, actions);
    apply_churn();
    apply_joint_action(world_, config_, actions);
    refresh_links();
    last_info_ = evaluate();
    world_.previous_reward = last_info_.reward.total;
    ++world_.t;

    StepResult result;
    result.reward = last_info_.reward;
    result.info = last_info_;
    result.observations = observations();
    return result;
}

std::vector<Observation> Environment::observations() const {
    std::vector<Observation> out;
    out.reserve(world_.uavs.size());
    for (int u = 0; u < n_uavs(); ++u) out.push_back(encode_observation(world_, config_, u));
    return out;
}

}  // namespace uavslice
