#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "test_support.hpp"
#include "uavslice/networks.hpp"

using namespace uavslice;
using namespace uavslice::testing;

TEST_CASE("actor output ranges") {
    std::mt19937_64 rng(1);
    ActorNetwork actor("actor", LearnerConfig{}, rng);
    const Tensor2 obs = random_observations(16, rng);
    const Tensor2 a = actor.forward(obs);
    REQUIRE(a.rows() == 16);
    REQUIRE(a.cols() == kActionWidth);
    for (Eigen::Index b = 0; b < a.rows(); ++b) {
        for (int i = 0; i < 3; ++i) CHECK((a(b, i) >= -1.0 && a(b, i) <= 1.0));
        CHECK((a(b, 3) >= 0.0 && a(b, 3) <= 1.0));
        double mass = 0.0;
        for (int i = 4; i < kActionWidth; ++i) mass += std::exp(a(b, i));
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
    }
    // scaled-down heads start close to the neutral action
    CHECK(a.leftCols(3).cwiseAbs().maxCoeff() < 0.5);
    CHECK(std::abs(a.col(3).mean() - 0.5) < 0.2);
}

TEST_CASE("actor rows are independent of batch composition") {
    std::mt19937_64 rng(2);
    ActorNetwork actor("actor", tiny_learner(), rng);
    const Tensor2 obs = random_observations(5, rng);
    const Tensor2 full = actor.forward(obs);
    for (Eigen::Index b = 0; b < 5; ++b) {
        const Tensor2 single = actor.forward(obs.middleRows(b, 1));
        CHECK(single.isApprox(full.middleRows(b, 1), 1e-13));
    }
}

TEST_CASE("actor gradients match finite differences") {
    std::mt19937_64 rng(3);
    SUBCASE("tiny shape") {
        ActorNetwork actor("actor", tiny_learner(), rng);
        const auto report = check_actor_gradients(actor, 100, 40, rng);
        CAPTURE(report.max_rel_error);
        CHECK(report.passed(140));
    }
    SUBCASE("default shape") {
        ActorNetwork actor("actor", LearnerConfig{}, rng);
        const auto report = check_actor_gradients(actor, 100, 40, rng, 2);
        CAPTURE(report.max_rel_error);
        CAPTURE(report.probes);
        CAPTURE(report.unresolved);
        CAPTURE(report.rejected);
        CAPTURE(report.max_noise_ratio);
        CHECK(report.passed(140));
    }
}

TEST_CASE("critic gradients match finite differences") {
    std::mt19937_64 rng(4);
    SUBCASE("tiny shape, three agents") {
        SharedCritic critic("critic", 3, tiny_learner(), rng);
        const auto report = check_critic_gradients(critic, 100, 60, rng);
        CAPTURE(report.max_rel_error);
        CHECK(report.passed(160));
    }
    SUBCASE("default shape, two agents") {
        SharedCritic critic("critic", 2, LearnerConfig{}, rng);
        const auto report = check_critic_gradients(critic, 100, 60, rng, 2);
        CAPTURE(report.max_rel_error);
        CHECK(report.passed(160));
    }
}

TEST_CASE("critic sees bandwidth only through its softmax") {
    std::mt19937_64 rng(5);
    SharedCritic critic("critic", 2, tiny_learner(), rng);
    std::vector<Tensor2> obs{random_observations(2, rng), random_observations(2, rng)};
    std::vector<Tensor2> actions{random_matrix(2, kActionWidth, rng), random_matrix(2, kActionWidth, rng)};
    const Tensor2 q = critic.forward(obs, actions);
    actions[1].rightCols(kNumDemandAreas).array() += 3.7;  // softmax is shift-invariant
    CHECK(critic.forward(obs, actions).isApprox(q, 1e-12));
}

TEST_CASE("input_only backward leaves parameter gradients untouched") {
    std::mt19937_64 rng(6);
    ActorNetwork actor("actor", tiny_learner(), rng);
    SharedCritic critic("critic", 2, tiny_learner(), rng);
    auto ap = actor.parameters();
    auto cp = critic.parameters();
    nn::zero_grads(ap);
    nn::zero_grads(cp);

    actor.forward(random_observations(3, rng));
    actor.backward(random_matrix(3, kActionWidth, rng), GradMode::input_only);
    std::vector<Tensor2> obs{random_observations(3, rng), random_observations(3, rng)};
    std::vector<Tensor2> actions{random_matrix(3, kActionWidth, rng), random_matrix(3, kActionWidth, rng)};
    critic.forward(obs, actions);
    const auto grads = critic.backward(random_matrix(3, 1, rng), GradMode::input_only);
    CHECK(grads.d_actions.size() == 2);
    for (auto* p : ap) CHECK(p->grad.isZero(0.0));
    for (auto* p : cp) CHECK(p->grad.isZero(0.0));
}

TEST_CASE("shape errors and missing caches") {
    std::mt19937_64 rng(7);
    ActorNetwork actor("actor", tiny_learner(), rng);
    CHECK_THROWS_AS(actor.backward(Tensor2::Zero(1, kActionWidth)), nn::MissingCacheError);
    CHECK_THROWS_AS(actor.forward(Tensor2::Zero(2, 79)), nn::ShapeError);
    SharedCritic critic("critic", 2, tiny_learner(), rng);
    std::vector<Tensor2> one{random_observations(2, rng)};
    std::vector<Tensor2> acts{random_matrix(2, kActionWidth, rng)};
    CHECK_THROWS_AS(critic.forward(one, acts), nn::ShapeError);
}

TEST_CASE("identical seeds give identical networks") {
    std::mt19937_64 r1(99), r2(99);
    ActorNetwork a("actor", LearnerConfig{}, r1), b("actor", LearnerConfig{}, r2);
    const auto pa = a.parameters(), pb = b.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->name == pb[i]->name);
        CHECK(pa[i]->value == pb[i]->value);
    }
}
