#include "uavslice/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace uavslice::channel {

LinkGeometry LinkGeometry::between(const Vec3& uav, const Vec3& ue, double wavelength) {
    const Vec3 delta = uav - ue;
    LinkGeometry g;
    g.distance_3d = delta.norm();
    g.wavelength = wavelength;
    if (g.distance_3d <= 0.0) {
        throw DomainError("link geometry: transmitter and receiver coincide");
    }
    const double ratio = std::clamp(delta.z / g.distance_3d, -1.0, 1.0);
    g.elevation_deg = std::min(90.0, std::asin(ratio) * 180.0 / std::numbers::pi);
    return g;
}

double los_probability(double elevation_deg, double a, double b) {
    if (!(elevation_deg > 0.0 && elevation_deg <= 90.0)) {
        throw DomainError("los_probability: elevation must lie in (0, 90] degrees, got " +
                          std::to_string(elevation_deg));
    }
    if (!(a > 0.0 && b > 0.0)) {
        throw DomainError("los_probability: sigmoid parameters must be positive");
    }
    return 1.0 / (1.0 + a * std::exp(-b * (elevation_deg - a)));
}

double excess_path_loss(double elevation_deg, const ChannelParams& params) {
    const double p = los_probability(elevation_deg, params.los_a, params.los_b);
    return params.eta_los_db * p + params.eta_nlos_db * (1.0 - p);
}

double free_space_path_loss_db(double distance_m, double wavelength_m) {
    if (!(distance_m > 0.0)) {
        throw DomainError("path loss: distance must be positive");
    }
    if (!(wavelength_m > 0.0)) {
        throw DomainError("path loss: wavelength must be positive");
    }
    return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m / wavelength_m);
}

double path_loss_db(const LinkGeometry& geometry, const ChannelParams& params) {
    return free_space_path_loss_db(geometry.distance_3d, geometry.wavelength) +
           excess_path_loss(geometry.elevation_deg, params);
}

double received_power_w(double tx_power_w, double path_loss_db) {
    return tx_power_w * std::pow(10.0, -path_loss_db / 10.0);
}

double sinr(std::span<const Emitter> emitters, std::size_t serving, double allocated_bw_hz,
            const ChannelParams& params) {
    if (!(allocated_bw_hz > 0.0)) {
        throw DomainError("sinr: allocated bandwidth must be positive");
    }
    if (serving >= emitters.size()) {
        throw DomainError("sinr: serving emitter index out of range");
    }
    double signal = 0.0;
    double interference = 0.0;
    for (std::size_t i = 0; i < emitters.size(); ++i) {
        const double prx =
            received_power_w(emitters[i].tx_power_w, path_loss_db(emitters[i].geometry, params));
        if (i == serving) {
            signal = prx;
        } else {
            interference += prx;
        }
    }
    return signal / (interference + params.noise_psd_w_per_hz * allocated_bw_hz);
}

double throughput_bps(double bw_hz, double sinr_linear) {
    if (bw_hz <= 0.0) return 0.0;
    // log1p keeps full relative precision in the noise-limited regime (sinr << 1)
    return bw_hz * std::log1p(std::max(0.0, sinr_linear)) / std::numbers::ln2;
}

double per_from_sinr(double sinr_db, const TrafficProfile& traffic) {
    if (std::isnan(sinr_db)) {
        throw DomainError("per_from_sinr: SINR is NaN");
    }
    const double z = traffic.per_slope_per_db * (sinr_db - traffic.per_threshold_db);
    // logistic 1/(1+e^z), evaluated without overflow on either tail
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

double drop_probability(double utilization, int buffer_packets) {
    if (!(utilization >= 0.0)) return 1.0;
    if (utilization >= 1.0) return 1.0;
    return std::min(1.0, std::pow(utilization, buffer_packets));
}

ReliabilityResult reliability(double per, double p_drop) {
    if (!(per >= 0.0 && per <= 1.0) || !(p_drop >= 0.0 && p_drop <= 1.0)) {
        throw DomainError("reliability: probabilities must lie in [0, 1]");
    }
    const double ok = 1.0 - per;
    ReliabilityResult r;
    r.per = per;
    r.p_drop = p_drop;
    r.reliability = std::clamp(ok * ok * ok * ok * (1.0 - p_drop), 0.0, 1.0);
    return r;
}

DelayBreakdown delay_total(double distance_3d, double throughput, double per,
                           const TrafficProfile& traffic, bool handover_occurred,
                           const DelayParams& params) {
    DelayBreakdown d;
    d.propagation_s = distance_3d / kSpeedOfLight;

    if (throughput > 0.0) {
        d.transmission_s = std::min(params.ceiling_s, traffic.packet_bits / throughput);
        const double service_rate = throughput / traffic.packet_bits;
        d.utilization = traffic.arrival_rate_pps / service_rate;
        if (d.utilization < 1.0) {
            d.queuing_s = std::min(params.ceiling_s,
                                   d.utilization / (2.0 * service_rate * (1.0 - d.utilization)));
        } else {
            d.queuing_s = params.ceiling_s;
        }
    } else {
        d.transmission_s = params.ceiling_s;
        d.queuing_s = params.ceiling_s;
        d.utilization = std::numeric_limits<double>::infinity();
    }

    // expected extra attempts of a transmission capped at four tries
    d.retransmission_s = d.transmission_s * (per + per * per + per * per * per);
    d.handover_s = handover_occurred ? params.handover_s : 0.0;
    d.processing_s = params.processing_s;
    d.total_s = d.propagation_s + d.transmission_s + d.retransmission_s + d.queuing_s +
                d.handover_s + d.processing_s;
    return d;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace uavslice::channel
