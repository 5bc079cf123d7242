#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include "uavslice/geometry.hpp"

namespace uavslice::channel {

inline constexpr double kSpeedOfLight = 2.99792458e8;

/// Thrown when an argument lies outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Suburban air-to-ground propagation constants plus the receiver noise floor.
struct ChannelParams {
    double los_a = 4.88;
    double los_b = 0.43;
    double eta_los_db = 0.1;
    double eta_nlos_db = 21.0;
    double noise_psd_w_per_hz = 1e-13;
    double carrier_hz = 3.5e9;

    double wavelength() const { return kSpeedOfLight / carrier_hz; }
};

/// Queueing and retransmission constants shared by every slice.
struct DelayParams {
    double handover_s = 0.050;
    double processing_s = 0.003;
    double ceiling_s = 10.0;
    int buffer_packets = 20;
};

/// Per-slice link-layer traffic and error-model parameters.
struct TrafficProfile {
    double packet_bits = 12000.0;
    double arrival_rate_pps = 200.0;
    double per_threshold_db = 3.0;
    double per_slope_per_db = 1.5;
};

struct LinkGeometry {
    double distance_3d = 0.0;
    double elevation_deg = 0.0;
    double wavelength = 0.0;

    /// Builds the geometry from a transmitter above a receiver. Elevation is
    /// capped at 90 degrees when the horizontal offset vanishes.
    static LinkGeometry between(const Vec3& uav, const Vec3& ue, double wavelength);
};

struct LinkBudget {
    double path_loss_db = 0.0;
    double received_power_w = 0.0;
    double sinr_linear = 0.0;
    double throughput_bps = 0.0;
};

struct DelayBreakdown {
    double propagation_s = 0.0;
    double transmission_s = 0.0;
    double retransmission_s = 0.0;
    double queuing_s = 0.0;
    double handover_s = 0.0;
    double processing_s = 0.0;
    double total_s = 0.0;
    /// Offered load lambda / mu of the M/D/1 queue; +inf when throughput is zero.
    double utilization = 0.0;
};

struct ReliabilityResult {
    double per = 0.0;
    double p_drop = 0.0;
    double reliability = 0.0;
};

double los_probability(double elevation_deg, double a, double b);
double excess_path_loss(double elevation_deg, const ChannelParams& params);
double free_space_path_loss_db(double distance_m, double wavelength_m);
double path_loss_db(const LinkGeometry& geometry, const ChannelParams& params);
double received_power_w(double tx_power_w, double path_loss_db);

/// One transmitter as seen from a receiver: its power and the geometry to it.
struct Emitter {
    double tx_power_w = 0.0;
    LinkGeometry geometry;
};

/// SINR at a receiver served by `emitters[serving]`; every other emitter
/// interferes at its full transmit power.
double sinr(std::span<const Emitter> emitters, std::size_t serving, double allocated_bw_hz,
            const ChannelParams& params);

double throughput_bps(double bw_hz, double sinr_linear);

/// Logistic waterfall block-error model in the dB domain.
double per_from_sinr(double sinr_db, const TrafficProfile& traffic);

/// Buffer overflow probability min(1, rho^K).
double drop_probability(double utilization, int buffer_packets);

ReliabilityResult reliability(double per, double p_drop);

DelayBreakdown delay_total(double distance_3d, double throughput_bps, double per,
                           const TrafficProfile& traffic, bool handover_occurred,
                           const DelayParams& params);

double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace uavslice::channel
