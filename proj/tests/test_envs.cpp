#include <gtest/gtest.h>

#include <cmath>

#include "linimed/envs.hpp"
#include "linimed/errors.hpp"
#include "linimed/stats.hpp"

using namespace linimed;

TEST(Synthetic, SuboptimalContextAtZeroNoise) {
    const Vector x = SyntheticEnvironment::suboptimal_context(2, 0.0);
    EXPECT_NEAR(x[0], 6.0 / 7.0, 1e-15);
    EXPECT_NEAR(x[1], 6.0 / 7.0, 1e-15);
    SyntheticEnvironment env(10, 2);
    EXPECT_NEAR(env.expected_reward(x), 6.0 / 7.0, 1e-15);
}

TEST(Synthetic, BestAndWorstRewards) {
    for (std::size_t d : {2, 3, 5, 20}) {
        SyntheticEnvironment env(10, d);
        Rng rng(d);
        const Round r = env.next_round(1, rng);
        ASSERT_EQ(r.arms.size(), 10u);
        EXPECT_NEAR(r.expected.front(), 1.0, 1e-12);
        EXPECT_NEAR(r.expected.back(), 0.0, 1e-15);
        EXPECT_EQ(r.best, 0u);
        EXPECT_NEAR(env.theta_star().norm(), 1.0, 1e-12);
    }
}

TEST(Synthetic, ArmsRespectNormBoundAndGapRange) {
    SyntheticEnvironment env(10, 3);
    Rng rng(1);
    for (std::size_t t = 1; t <= 200; ++t) {
        const Round r = env.next_round(t, rng);
        for (std::size_t a = 0; a < r.arms.size(); ++a) {
            EXPECT_LE(r.arms.arms[a].x.norm(), env.bound_L() + 1e-12);
            EXPECT_GE(r.regret(a), 0.0);
        }
        for (std::size_t a = 1; a + 1 < r.arms.size(); ++a) {
            // 1 - 1/(7+z), z in [0, 0.1]
            EXPECT_GE(r.expected[a], 6.0 / 7.0 - 1e-15);
            EXPECT_LE(r.expected[a], 1.0 - 1.0 / 7.1 + 1e-15);
        }
    }
}

TEST(Synthetic, RejectsBadShape) {
    EXPECT_THROW(SyntheticEnvironment(2, 2), ConfigError);
    EXPECT_THROW(SyntheticEnvironment(10, 1), ConfigError);
}

TEST(EndOfOptimism, RewardsAndGaps) {
    const ArmSet arms = eoo_arms(0.01);
    EndOfOptimismEnvironment env(0.01);
    ASSERT_EQ(arms.size(), 3u);
    EXPECT_NEAR(env.expected_reward(arms.arms[0].x), 1.0, 1e-15);
    EXPECT_NEAR(env.expected_reward(arms.arms[1].x), 0.0, 1e-15);
    EXPECT_NEAR(env.expected_reward(arms.arms[2].x), 0.99, 1e-15);

    EndOfOptimismEnvironment e2(0.02);
    Rng rng(0);
    const Round r = e2.next_round(1, rng);
    EXPECT_NEAR(r.regret(2), 0.02, 1e-15);
    EXPECT_NEAR(r.regret(1), 1.0, 1e-15);
}

TEST(EndOfOptimism, SmallEpsilonApproachesTie) {
    EndOfOptimismEnvironment env(1e-9);
    EXPECT_NEAR(env.expected_reward(env.arms(1).arms[2].x), 1.0, 1e-8);
    EXPECT_THROW(EndOfOptimismEnvironment(0.0), ConfigError);
}

TEST(EndOfOptimism, ArmSetIsTimeInvariant) {
    EndOfOptimismEnvironment env(0.05);
    const ArmSet a = env.arms(1), b = env.arms(1000);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.arms[i].x, b.arms[i].x);
}

TEST(Reward, NoiselessIsExact) {
    SyntheticEnvironment env(10, 3, 0.0);
    Rng rng(0);
    const Vector x = SyntheticEnvironment::suboptimal_context(3, 0.05);
    EXPECT_EQ(draw_reward(env, x, rng), env.expected_reward(x));
}

TEST(Reward, SampleMeanWithinClt) {
    EndOfOptimismEnvironment env(0.01, 0.1);
    const Vector x = env.arms(1).arms[2].x;
    Rng rng(42);
    const int n = 100000;
    std::vector<double> ys(n);
    for (auto& y : ys) y = draw_reward(env, x, rng);
    EXPECT_LE(std::abs(sample_mean(ys) - 0.99), 4.0 * 0.1 / std::sqrt(double(n)));
}

TEST(Reward, WorstArmVariance) {
    SyntheticEnvironment env(10, 2, 0.1);
    Vector worst = Vector::Zero(2);
    worst[1] = 1.0;
    Rng rng(43);
    std::vector<double> ys(100000);
    for (auto& y : ys) y = draw_reward(env, worst, rng);
    EXPECT_NEAR(sample_variance(ys), 0.01, 0.0005);
    EXPECT_NEAR(sample_mean(ys), 0.0, 4.0 * 0.1 / std::sqrt(1e5));
}

TEST(Reward, NegativeNoiseRejected) { EXPECT_THROW(SyntheticEnvironment(10, 2, -0.1), ConfigError); }
