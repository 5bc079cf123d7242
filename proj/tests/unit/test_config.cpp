#include <cstdlib>
#include <string>

#include "doctest.h"
#include "uavslice/config.hpp"

using namespace uavslice;

TEST_CASE("empty file gives the default simulation settings") {
    const auto parsed = parse_config_text("");
    const ExperimentConfig& c = parsed.config;
    CHECK(parsed.defaulted_keys.size() == config_keys().size());
    CHECK(serialize(c) == serialize(ExperimentConfig{}));

    CHECK(c.scenario.box.x_min == 0.0);
    CHECK(c.scenario.box.x_max == 2000.0);
    CHECK(c.scenario.box.y_max == 2000.0);
    CHECK(c.scenario.box.h_min == 100.0);
    CHECK(c.scenario.box.h_max == 400.0);
    CHECK(c.scenario.n_uavs == 3);
    CHECK(c.scenario.ue_min == 180);
    CHECK(c.scenario.ue_max == 300);
    CHECK(c.scenario.near_edge_m == 300.0);
    CHECK(c.scenario.medium_edge_m == 600.0);
    CHECK(c.channel.noise_psd_w_per_hz == 1e-13);
    CHECK(c.channel.carrier_hz == 3.5e9);
    CHECK(c.uav.bandwidth_hz == 600e6);
    CHECK(c.uav.resource_blocks == 1667);
    CHECK(c.uav.p_min_w == 0.0);
    CHECK(c.uav.p_max_w == 10.0);
    CHECK(c.uav.beam_angle_deg == 60.0);
    CHECK(c.reward.alpha == 2.0);
    CHECK(c.reward.beta == 0.8);
    CHECK(c.reward.gamma_f == 0.5);
    CHECK(c.learner.lr_actor == 1e-4);
    CHECK(c.learner.lr_critic == 1e-3);
    CHECK(c.learner.gamma_d == 0.99);
    CHECK(c.learner.tau == 0.005);
    CHECK(c.learner.buffer_capacity == 300000);
    CHECK(c.learner.batch_size == 256);
    CHECK(c.noise.sigma0 == 1.0);
    CHECK(c.noise.rho == 0.981);
    CHECK(c.noise.sigma_min == 0.005);
    CHECK(c.noise.reset_sigma == 0.6);

    CHECK(c.profile(Slice::URLLC).priority == 3.0);
    CHECK(c.profile(Slice::eMBB).priority == 2.0);
    CHECK(c.profile(Slice::mMTC).priority == 1.0);
    for (const auto& p : c.slices) {
        CHECK(p.w_throughput + p.w_delay + p.w_reliability == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("serialize then parse round-trips") {
    ExperimentConfig c;
    c.reward.alpha = 2.0;
    c.reward.beta = 0.123456789012345;
    c.learner.critic_trunk = {32, 16};
    c.scenario.uav_spawns = {{10.0, 20.0, 150.0}, {500.0, 600.0, 200.0}, {1.5, 2.5, 399.0}};
    c.run.out_dir = "some dir/with # hash";
    const auto back = parse_config_text(serialize(c)).config;
    CHECK(serialize(back) == serialize(c));
    CHECK(back.reward.alpha == 2.0);
    CHECK(back.reward.beta == c.reward.beta);
    CHECK(back.run.out_dir == c.run.out_dir);
    CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("sections prefix keys and comments are ignored") {
    const auto c = parse_config_text("# header\n[reward]\nalpha = 1.5  # inline\n\n[run]\nsteps = 77\n").config;
    CHECK(c.reward.alpha == 1.5);
    CHECK(c.run.steps == 77);
}

TEST_CASE("satisfaction weights must sum to one") {
    CHECK_THROWS_AS(parse_config_text("slice.eMBB.w_throughput = 0.5\nslice.eMBB.w_delay = 0.3\n"
                                      "slice.eMBB.w_reliability = 0.3\n"),
                    ConfigError);
    ExperimentConfig c;
    c.slices[1].w_throughput = 0.5;
    c.slices[1].w_delay = 0.3;
    c.slices[1].w_reliability = 0.3;
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("malformed input is rejected with a line number") {
    CHECK_THROWS_AS(parse_config_text("no.such.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("reward.alpha = 1\nreward.alpha = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("run.steps = many\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just some words\n"), ConfigError);
    try {
        parse_config_text("\n\nreward.alpha = \"x\"\n");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("validation catches inconsistent settings") {
    auto rejects = [](auto mutate) {
        ExperimentConfig c;
        mutate(c);
        CHECK_THROWS_AS(validate(c), ConfigError);
    };
    rejects([](ExperimentConfig& c) { c.scenario.ue_min = 400; });
    rejects([](ExperimentConfig& c) { c.scenario.box.h_min = 500.0; });
    rejects([](ExperimentConfig& c) { c.uav.p_min_w = 20.0; });
    rejects([](ExperimentConfig& c) { c.learner.tau = 0.0; });
    rejects([](ExperimentConfig& c) { c.scenario.slice_mix = {0.5, 0.5, 0.5}; });
    rejects([](ExperimentConfig& c) { c.scenario.uav_spawns = {{1.0, 1.0, 150.0}}; });
    CHECK_NOTHROW(validate(ExperimentConfig{}));
}

TEST_CASE("environment overrides") {
    ExperimentConfig c;
    setenv("UAVSLICE_REWARD__BETA", "0.25", 1);
    const auto applied = apply_env_overrides(c);
    unsetenv("UAVSLICE_REWARD__BETA");
    REQUIRE(applied.size() == 1);
    CHECK(applied[0] == "reward.beta");
    CHECK(c.reward.beta == 0.25);
}

TEST_CASE("config hash ignores run settings") {
    ExperimentConfig a, b;
    b.run.seed = 99;
    b.run.out_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.reward.alpha = 2.5;
    CHECK(config_hash(a) != config_hash(b));
}
