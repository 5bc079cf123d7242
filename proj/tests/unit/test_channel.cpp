#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "uavslice/channel.hpp"

#include "../oracles/channel_cases.inc"

using namespace uavslice;
using namespace uavslice::channel;

namespace {

const ChannelParams kParams{};

bool close_rel(double actual, double expected, double rel) {
    return std::abs(actual - expected) <= rel * std::max(std::abs(expected), 1e-300);
}

// Reference SINR with no shared helpers: raw Friis, raw sigmoid, linear sums.
double naive_sinr(const std::vector<double>& powers, const std::vector<double>& dists,
                  const std::vector<double>& thetas, std::size_t serving, double bw) {
    const double pi = 3.14159265358979323846;
    const double lambda = 299792458.0 / 3.5e9;
    double signal = 0.0;
    double interference = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        const double p = 1.0 / (1.0 + 4.88 * std::exp(-0.43 * (thetas[i] - 4.88)));
        const double loss_db = 20.0 * std::log10(4.0 * pi * dists[i] / lambda) + 0.1 * p + 21.0 * (1.0 - p);
        const double rx = powers[i] * std::pow(10.0, -loss_db / 10.0);
        (i == serving ? signal : interference) += rx;
    }
    return signal / (interference + 1e-13 * bw);
}

}  // namespace

TEST_CASE("los probability scalar values") {
    CHECK(los_probability(4.88, 4.88, 0.43) == doctest::Approx(1.0 / 5.88).epsilon(1e-15));
    const double at_zenith = los_probability(90.0, 4.88, 0.43);
    CHECK(at_zenith < 1.0 + 1e-15);
    CHECK(1.0 - at_zenith < 1e-15);
    CHECK(close_rel(los_probability(30.0, 4.88, 0.43), 0.99990061945279538082, 1e-12));
}

TEST_CASE("excess path loss scalar values") {
    CHECK(excess_path_loss(90.0, kParams) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(close_rel(excess_path_loss(4.88, kParams), 17.445578231292517007, 1e-12));
    CHECK(close_rel(excess_path_loss(30.0, kParams), 0.10207705343657654096, 1e-12));
    ChannelParams flat = kParams;
    flat.eta_los_db = 5.0;
    flat.eta_nlos_db = 5.0;
    for (double theta : {0.5, 10.0, 33.0, 89.0}) CHECK(excess_path_loss(theta, flat) == doctest::Approx(5.0));
}

TEST_CASE("path loss scalar values") {
    const double lambda = kParams.wavelength();
    CHECK(lambda == doctest::Approx(0.085655).epsilon(1e-5));
    CHECK(close_rel(path_loss_db({100.0, 90.0, lambda}, kParams), 83.42914410888889948, 1e-12));
    CHECK(close_rel(path_loss_db({1000.0, 30.0, lambda}, kParams), 103.43122116232546306, 1e-12));
    for (double d : {1.0, 37.0, 250.0, 4000.0}) {
        CHECK(free_space_path_loss_db(2.0 * d, lambda) - free_space_path_loss_db(d, lambda) ==
              doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("oracle cases: angle, path loss, sinr, delay, reliability") {
    for (const auto& c : kAngleCases) {
        CHECK(close_rel(los_probability(c.theta, 4.88, 0.43), c.p_los, 1e-9));
        CHECK(close_rel(excess_path_loss(c.theta, kParams), c.excess, 1e-9));
    }
    for (const auto& c : kPathLossCases) {
        CHECK(close_rel(path_loss_db({c.distance, c.theta, kParams.wavelength()}, kParams), c.path_loss_db, 1e-9));
    }
    for (const auto& c : kSinrCases) {
        std::vector<Emitter> emitters;
        for (int i = 0; i < 3; ++i) emitters.push_back({c.power[i], {c.distance[i], c.theta[i], kParams.wavelength()}});
        const double s = sinr(emitters, static_cast<std::size_t>(c.serving), c.bw, kParams);
        CHECK(close_rel(s, c.sinr, 1e-9));
        CHECK(close_rel(throughput_bps(c.bw, s), c.throughput, 1e-9));
    }
    const DelayParams dp{};
    for (const auto& c : kDelayCases) {
        TrafficProfile traffic;
        traffic.packet_bits = c.packet_bits;
        traffic.arrival_rate_pps = c.arrival;
        const auto d = delay_total(c.distance, c.throughput, c.per, traffic, c.handover, dp);
        CHECK(close_rel(d.total_s, c.total, 1e-9));
        CHECK(close_rel(d.utilization, c.utilization, 1e-9));
        CHECK(close_rel(drop_probability(d.utilization, dp.buffer_packets), c.p_drop, 1e-9));
    }
    for (const auto& c : kReliabilityCases) {
        CHECK(close_rel(reliability(c.per, c.p_drop).reliability, c.reliability, 1e-9));
    }
}

TEST_CASE("sinr special cases") {
    // P_rx = 1e-7 W and N0 * B = 1e-7 W with no interferers.
    const double lambda = kParams.wavelength();
    const LinkGeometry g{100.0, 90.0, lambda};
    const double loss = path_loss_db(g, kParams);
    const double tx = 1e-7 / received_power_w(1.0, loss);
    const std::vector<Emitter> single{{tx, g}};
    CHECK(sinr(single, 0, 1e6, kParams) == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<Emitter> twins{{tx, g}, {tx, g}};
    CHECK(sinr(twins, 0, 1e6, kParams) == doctest::Approx(1e-7 / (1e-7 + 1e-7)).epsilon(1e-12));
    CHECK(sinr(twins, 0, 1e6, kParams) < 1.0);
}

TEST_CASE("sinr matches a naive reference on random scenes") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(0.0, 2000.0), alt(100.0, 400.0), pw(0.0, 10.0),
        bw(1e3, 6e8);
    for (int scene = 0; scene < 50; ++scene) {
        std::vector<Vec3> uavs(3);
        std::vector<double> powers(3);
        for (int u = 0; u < 3; ++u) {
            uavs[u] = {pos(rng), pos(rng), alt(rng)};
            powers[u] = pw(rng) + 1e-3;
        }
        for (int e = 0; e < 20; ++e) {
            const Vec3 ue{pos(rng), pos(rng), 1.5};
            std::vector<Emitter> emitters;
            std::vector<double> dists, thetas;
            for (int u = 0; u < 3; ++u) {
                const double dx = uavs[u].x - ue.x, dy = uavs[u].y - ue.y, dz = uavs[u].z - ue.z;
                const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
                dists.push_back(d);
                thetas.push_back(std::asin(dz / d) * 180.0 / 3.14159265358979323846);
                emitters.push_back({powers[u], LinkGeometry::between(uavs[u], ue, kParams.wavelength())});
            }
            const auto serving = static_cast<std::size_t>(e % 3);
            const double band = bw(rng);
            CHECK(close_rel(sinr(emitters, serving, band, kParams), naive_sinr(powers, dists, thetas, serving, band),
                            1e-12));
        }
    }
}

TEST_CASE("link geometry from positions") {
    const double lambda = kParams.wavelength();
    const Vec3 uav{100.0, 200.0, 300.0};
    const Vec3 ue{400.0, 600.0, 1.5};
    const auto g = LinkGeometry::between(uav, ue, lambda);
    const double d = (uav - ue).norm();
    CHECK(g.distance_3d == doctest::Approx(d).epsilon(1e-15));
    CHECK(std::abs(g.elevation_deg - std::asin(298.5 / d) * 180.0 / 3.14159265358979323846) < 1e-9);
    CHECK(g.wavelength == lambda);
    const auto above = LinkGeometry::between({5.0, 5.0, 200.0}, {5.0, 5.0, 1.5}, lambda);
    CHECK(above.elevation_deg == 90.0);
}

TEST_CASE("throughput, per and reliability scalar values") {
    CHECK(throughput_bps(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(throughput_bps(0.0, 3.0) == 0.0);
    CHECK(close_rel(throughput_bps(1e6, 0.0455), 64193.061927492239263, 1e-12));
    CHECK(throughput_bps(2e5, 1e-3) > 0.0);

    TrafficProfile urllc;
    urllc.per_threshold_db = 5.0;
    urllc.per_slope_per_db = 1.5;
    CHECK(per_from_sinr(5.0, urllc) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(close_rel(per_from_sinr(8.0, urllc), 0.010986942630593180039, 1e-12));
    CHECK(per_from_sinr(1e6, urllc) == 0.0);
    CHECK(per_from_sinr(-1e6, urllc) == 1.0);
    CHECK(per_from_sinr(std::numeric_limits<double>::infinity(), urllc) == 0.0);
    CHECK(per_from_sinr(-std::numeric_limits<double>::infinity(), urllc) == 1.0);

    CHECK(reliability(0.0, 0.0).reliability == 1.0);
    CHECK(reliability(1.0, 0.0).reliability == 0.0);
    CHECK(reliability(0.1, 0.01).reliability == doctest::Approx(0.649539).epsilon(1e-12));
}

TEST_CASE("delay breakdown") {
    const DelayParams dp{};
    TrafficProfile t;
    t.packet_bits = 12000.0;
    t.arrival_rate_pps = 40.0;

    SUBCASE("propagation over c/1000 metres is one millisecond") {
        const auto d = delay_total(kSpeedOfLight / 1000.0, 1e6, 0.0, t, false, dp);
        CHECK(d.propagation_s == doctest::Approx(1e-3).epsilon(1e-15));
    }
    SUBCASE("ideal channel and empty queue") {
        TrafficProfile idle = t;
        idle.arrival_rate_pps = 1e-12;
        const auto d = delay_total(300.0, 1e6, 0.0, idle, false, dp);
        CHECK(d.retransmission_s == 0.0);
        CHECK(d.queuing_s < 1e-15);
    }
    SUBCASE("M/D/1 oracle") {
        const auto d = delay_total(300.0, 1e6, 0.1, t, false, dp);
        CHECK(close_rel(d.propagation_s, 1.0006922855944561487e-6, 1e-12));
        CHECK(close_rel(d.transmission_s, 0.012, 1e-12));
        CHECK(close_rel(d.retransmission_s, 0.001332, 1e-12));
        CHECK(close_rel(d.queuing_s, 0.0055384615384615384615, 1e-12));
        CHECK(d.handover_s == 0.0);
        CHECK(d.processing_s == 0.003);
        CHECK(close_rel(d.total_s, 0.021871462230747132918, 1e-12));
        CHECK(close_rel(drop_probability(d.utilization, 20), 4.2152636897984288378e-7, 1e-12));
        const auto ho = delay_total(300.0, 1e6, 0.1, t, true, dp);
        CHECK(ho.handover_s == 0.050);
        CHECK(ho.total_s == doctest::Approx(d.total_s + 0.050).epsilon(1e-14));
    }
    SUBCASE("components sum to the total") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 1000; ++i) {
            const auto d = delay_total(100.0 + 2000.0 * u(rng), u(rng) < 0.05 ? 0.0 : 1e7 * u(rng), u(rng), t,
                                       u(rng) < 0.5, dp);
            const double sum = d.propagation_s + d.transmission_s + d.retransmission_s + d.queuing_s +
                               d.handover_s + d.processing_s;
            CHECK(d.total_s == doctest::Approx(sum).epsilon(1e-14));
            CHECK(d.queuing_s <= dp.ceiling_s);
        }
    }
    SUBCASE("saturated queue hits the ceiling") {
        const auto d = delay_total(300.0, 1e3, 0.0, t, false, dp);
        CHECK(d.utilization >= 1.0);
        CHECK(d.queuing_s == dp.ceiling_s);
        CHECK(drop_probability(d.utilization, 20) == 1.0);
        const auto dead = delay_total(300.0, 0.0, 0.0, t, false, dp);
        CHECK(dead.transmission_s == dp.ceiling_s);
        CHECK(std::isinf(dead.utilization));
    }
}

TEST_CASE("monotonicity and bounds over random pairs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> theta(0.01, 90.0), dist(1.0, 5000.0), db(-40.0, 40.0);
    TrafficProfile traffic;
    for (int i = 0; i < 10000; ++i) {
        double t1 = theta(rng), t2 = theta(rng);
        if (t1 > t2) std::swap(t1, t2);
        if (t1 < t2) {
            CHECK(los_probability(t1, 4.88, 0.43) <= los_probability(t2, 4.88, 0.43));
        }
        double d1 = dist(rng), d2 = dist(rng);
        if (d1 > d2) std::swap(d1, d2);
        if (d1 < d2) {
            const double th = theta(rng);
            CHECK(path_loss_db({d1, th, kParams.wavelength()}, kParams) <
                  path_loss_db({d2, th, kParams.wavelength()}, kParams));
        }
        double s1 = db(rng), s2 = db(rng);
        if (s1 > s2) std::swap(s1, s2);
        if (s1 < s2) CHECK(per_from_sinr(s1, traffic) >= per_from_sinr(s2, traffic));

        const double p = los_probability(t1, 4.88, 0.43);
        CHECK((p >= 0.0 && p <= 1.0));
        const double eta = excess_path_loss(t1, kParams);
        CHECK((eta >= 0.1 - 1e-12 && eta <= 21.0 + 1e-12));
        const double per = per_from_sinr(s1, traffic);
        CHECK((per >= 0.0 && per <= 1.0));
        const double r = reliability(per, per / 2.0).reliability;
        CHECK((r >= 0.0 && r <= 1.0));
    }
}

TEST_CASE("strict monotonicity on well-separated points") {
    CHECK(los_probability(10.0, 4.88, 0.43) < los_probability(20.0, 4.88, 0.43));
    TrafficProfile traffic;
    CHECK(per_from_sinr(0.0, traffic) > per_from_sinr(6.0, traffic));
}

TEST_CASE("dB conversions round-trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> db(-200.0, 100.0);
    for (int i = 0; i < 10000; ++i) {
        const double x = db(rng);
        CHECK(close_rel(linear_to_db(db_to_linear(x)), x, 1e-12));
        const double lin = db_to_linear(x);
        CHECK(close_rel(db_to_linear(linear_to_db(lin)), lin, 1e-12));
    }
}

TEST_CASE("domain errors") {
    const std::vector<Emitter> one{{1.0, {100.0, 45.0, kParams.wavelength()}}};
    CHECK_THROWS_AS(sinr(one, 0, 0.0, kParams), DomainError);
    CHECK_THROWS_AS(sinr(one, 1, 1e6, kParams), DomainError);
    CHECK_THROWS_AS(los_probability(0.0, 4.88, 0.43), DomainError);
    CHECK_THROWS_AS(per_from_sinr(std::nan(""), TrafficProfile{}), DomainError);
    CHECK_THROWS_AS(reliability(1.5, 0.0), DomainError);
    CHECK_THROWS_AS(free_space_path_loss_db(0.0, 0.1), DomainError);
}
