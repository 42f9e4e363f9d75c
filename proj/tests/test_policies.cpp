#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "linimed/envs.hpp"
#include "linimed/errors.hpp"
#include "linimed/harness.hpp"
#include "linimed/policies.hpp"

using namespace linimed;

namespace {

std::vector<ArmStats> two_arm_stats(double m0, double m1, double w0, double w1) {
    std::vector<ArmStats> s(2);
    s[0] = {0, m0, m0 + std::sqrt(w0), w0, 0.0, 0.0};
    s[1] = {1, m1, m1 + std::sqrt(w1), w1, 0.0, 0.0};
    return s;
}

ArmSet make_arms(const std::vector<Vector>& xs) {
    ArmSet set;
    for (std::size_t i = 0; i < xs.size(); ++i) set.arms.push_back({static_cast<int>(i), xs[i]});
    return set;
}

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

PolicyConfig unit_cfg(Mode mode) {
    PolicyConfig c;
    c.lambda = 1.0;
    c.mode = mode;
    c.horizon_T = 100;
    return c;
}

}  // namespace

TEST(LinImedIndices, TwoArmLinImed1) {
    PolicyConfig cfg;
    const auto s = linimed_indices(Mode::LinIMED1, two_arm_stats(1.0, 0.5, 1.0, 1.0), cfg);
    EXPECT_NEAR(s[0].index, 0.0, 1e-15);
    EXPECT_NEAR(s[1].index, 0.25, 1e-15);
    EXPECT_EQ(argmin_index(s), 0u);
}

TEST(LinImedIndices, LinImed2AnchorCappedByLogT) {
    PolicyConfig cfg;
    cfg.horizon_T = 10;
    const auto s = linimed_indices(Mode::LinIMED2, two_arm_stats(1.0, 0.5, 1.0, 1.0), cfg);
    EXPECT_NEAR(s[0].index, 0.0, 1e-15);
    // With a tiny width the log T cap binds.
    const auto capped = linimed_indices(Mode::LinIMED2, two_arm_stats(1.0, 0.5, 1e-6, 1.0), cfg);
    EXPECT_NEAR(capped[0].index, std::log(10.0), 1e-15);
}

TEST(LinImedIndices, LinImed3UsesUcbGap) {
    PolicyConfig cfg;
    cfg.constant_C = 30.0;
    std::vector<ArmStats> s(2);
    s[0] = {0, 1.5, 2.0, 0.25, 0.0, 0.0};
    s[1] = {1, 0.5, 1.0, 0.25, 0.0, 0.0};
    s = linimed_indices(Mode::LinIMED3, s, cfg);
    EXPECT_NEAR(s[0].gap, 0.0, 1e-15);
    EXPECT_NEAR(s[1].gap, 1.0, 1e-15);
    EXPECT_NEAR(s[0].index, std::log(4.0), 1e-12);
    EXPECT_NEAR(s[0].index, 1.386, 1e-3);
    EXPECT_NEAR(s[1].index, 4.0 + std::log(4.0), 1e-12);
    EXPECT_NEAR(s[1].index, 5.386, 1e-3);
}

TEST(LinImedIndices, LinImed3AllGapsZeroFallsBackToNegLog) {
    PolicyConfig cfg;
    std::vector<ArmStats> s(2);
    s[0] = {0, 1.0, 1.5, 0.25, 0.0, 0.0};
    s[1] = {1, 1.0, 1.5, 0.25, 0.0, 0.0};
    s = linimed_indices(Mode::LinIMED3, s, cfg);
    EXPECT_NEAR(s[0].index, std::log(4.0), 1e-15);
    EXPECT_EQ(argmin_index(s), 0u);
}

TEST(LinImedIndices, ZeroWidthIsInfinite) {
    PolicyConfig cfg;
    const auto s = linimed_indices(Mode::LinIMED1, two_arm_stats(1.0, 0.5, 0.0, 1.0), cfg);
    EXPECT_TRUE(std::isinf(s[0].index));
    EXPECT_EQ(argmin_index(s), 1u);
}

TEST(LinImedIndices, RejectsNonImedModeAndEmpty) {
    PolicyConfig cfg;
    EXPECT_THROW(linimed_indices(Mode::LinUCB, two_arm_stats(1, 0, 1, 1), cfg), UsageError);
    EXPECT_THROW(linimed_indices(Mode::LinIMED1, {}, cfg), UsageError);
}

TEST(LinImedIndicesProperty, ShiftOfAllEstimatesLeavesIndicesUnchanged) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0), lw(-6.0, 1.0);
    PolicyConfig cfg;
    for (int trial = 0; trial < 500; ++trial) {
        const int K = 2 + trial % 5;
        std::vector<ArmStats> s(K), shifted(K);
        const double shift = 3.0 * u(rng);
        for (int a = 0; a < K; ++a) {
            const double m = u(rng), w = std::exp(lw(rng));
            s[a] = {a, m, m + std::sqrt(w), w, 0.0, 0.0};
            shifted[a] = {a, m + shift, m + shift + std::sqrt(w), w, 0.0, 0.0};
        }
        for (Mode mode : {Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3}) {
            const auto a = linimed_indices(mode, s, cfg);
            const auto b = linimed_indices(mode, shifted, cfg);
            for (int i = 0; i < K; ++i) ASSERT_NEAR(a[i].index, b[i].index, 1e-9 * (1.0 + std::abs(a[i].index)));
        }
    }
}

TEST(LinImedIndicesProperty, PermutingArmsKeepsTheChosenId) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0), lw(-6.0, 1.0);
    PolicyConfig cfg;
    for (int trial = 0; trial < 500; ++trial) {
        const int K = 2 + trial % 5;
        std::vector<ArmStats> s(K);
        for (int a = 0; a < K; ++a) {
            const double m = u(rng), w = std::exp(lw(rng));
            s[a] = {a, m, m + std::sqrt(w), w, 0.0, 0.0};
        }
        auto p = s;
        std::shuffle(p.begin(), p.end(), rng);
        for (Mode mode : {Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3}) {
            const auto a = linimed_indices(mode, s, cfg);
            const auto b = linimed_indices(mode, p, cfg);
            ASSERT_EQ(a[argmin_index(a)].arm_id, b[argmin_index(b)].arm_id);
        }
    }
}

TEST(LinImedIndicesProperty, AnchorIndexNeverAboveItsNegLogWidth) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0), lw(-8.0, 1.0);
    PolicyConfig cfg;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<ArmStats> s(4);
        for (int a = 0; a < 4; ++a) {
            const double m = u(rng), w = std::exp(lw(rng));
            s[a] = {a, m, m + std::sqrt(w), w, 0.0, 0.0};
        }
        for (Mode mode : {Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3}) {
            for (const auto& st : linimed_indices(mode, s, cfg)) {
                ASSERT_GE(st.gap, 0.0);
                ASSERT_LE(st.index, st.gap * st.gap / st.width_sq - std::log(st.width_sq) + 1e-12);
            }
        }
    }
}

TEST(Select, FreshStateTieGoesToLowestId) {
    const auto arms = make_arms({v2(1, 0), v2(0, 1), v2(0, -1)});
    Rng rng(0);
    for (Mode m : {Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3, Mode::LinUCB}) {
        RidgePolicy p(unit_cfg(m), 2);
        EXPECT_EQ(p.select(arms, rng).arm_id, 0) << mode_name(m);
    }
}

TEST(Select, LinUcbPrefersDominatingArm) {
    RidgePolicy p(unit_cfg(Mode::LinUCB), 2);
    p.observe(v2(1, 0), 2.0);
    p.observe(v2(0, 1), 1.0);
    const auto arms = make_arms({v2(1, 0), v2(0, 1)});
    Rng rng(0);
    const auto sel = p.select(arms, rng);
    EXPECT_NEAR(sel.stats[0].mean, 1.0, 1e-15);
    EXPECT_NEAR(sel.stats[1].mean, 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(sel.stats[0].width_sq, sel.stats[1].width_sq);
    EXPECT_EQ(sel.arm_id, 0);
}

TEST(Select, LinImed1PicksAnchorInTwoArmExample) {
    RidgePolicy p(unit_cfg(Mode::LinIMED1), 2);
    p.observe(v2(1, 0), 2.0);
    p.observe(v2(0, 1), 1.0);
    Rng rng(0);
    const auto sel = p.select(make_arms({v2(1, 0), v2(0, 1)}), rng);
    EXPECT_LT(sel.stats[0].index, sel.stats[1].index);
    EXPECT_EQ(sel.arm_id, 0);
}

TEST(Select, RejectsEmptyAndMismatchedArms) {
    RidgePolicy p(unit_cfg(Mode::LinIMED1), 2);
    Rng rng(0);
    EXPECT_THROW(p.select(ArmSet{}, rng), UsageError);
    EXPECT_THROW(p.select(make_arms({Vector::Ones(3)}), rng), UsageError);
}

TEST(Observe, UpdatesEstimate) {
    RidgePolicy p(unit_cfg(Mode::LinIMED1), 2);
    p.observe(v2(1, 0), 1.0);
    EXPECT_NEAR(p.ridge().predict(v2(1, 0)), 0.5, 1e-15);
    EXPECT_EQ(p.rounds(), 1u);
}

TEST(Observe, ZeroContextLeavesEstimate) {
    RidgePolicy p(unit_cfg(Mode::LinIMED2), 2);
    p.observe(v2(1, 0), 1.0);
    const Vector before = p.ridge().estimate();
    p.observe(v2(0, 0), 7.0);
    EXPECT_EQ(p.ridge().estimate(), before);
}

TEST(LinTs, ZeroScaleSamplesTheEstimate) {
    auto cfg = unit_cfg(Mode::LinTS);
    cfg.alpha_scale = 0.0;
    RidgePolicy p(cfg, 2);
    p.observe(v2(1, 0), 1.0);
    Rng rng(4);
    EXPECT_EQ(p.sample_theta(rng), p.ridge().estimate());
}

TEST(LinTs, SampleCovarianceMatchesScaledInverse) {
    auto cfg = unit_cfg(Mode::LinTS);
    cfg.alpha_scale = 0.5;
    RidgePolicy p(cfg, 2);
    p.observe(v2(1, 0), 1.0);
    p.observe(v2(1, 1), 0.5);
    Rng rng(5);
    const int n = 40000;
    Matrix cov = Matrix::Zero(2, 2);
    Vector mean = Vector::Zero(2);
    std::vector<Vector> draws;
    for (int i = 0; i < n; ++i) draws.push_back(p.sample_theta(rng));
    for (const auto& d : draws) mean += d / n;
    for (const auto& d : draws) cov += (d - mean) * (d - mean).transpose() / (n - 1);
    const Matrix expected = 0.25 * p.current_beta() * p.ridge().gram_inv();
    EXPECT_LT((mean - p.ridge().estimate()).cwiseAbs().maxCoeff(), 0.02);
    EXPECT_LT((cov - expected).cwiseAbs().maxCoeff(), 0.05 * expected.cwiseAbs().maxCoeff());
}

TEST(Uniform, CoversEveryArm) {
    UniformPolicy p(2);
    const auto arms = make_arms({v2(1, 0), v2(0, 1), v2(1, 1), v2(0, 0)});
    Rng rng(6);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 4000; ++i) ++counts[static_cast<std::size_t>(p.select(arms, rng).arm_id)];
    for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

// SupLinIMED

TEST(SupLin, WidthScale) {
    const double expected = std::sqrt(0.5 * std::log(2.0 * 1000.0 * 10.0 * 2.0));
    EXPECT_NEAR(SupLinImed::width_scale(1, 1000, 10), expected, 1e-15);
    EXPECT_NEAR(SupLinImed::width_scale(1, 1000, 10), 2.3018, 1e-4);
    EXPECT_GT(SupLinImed::width_scale(5, 1000, 10), SupLinImed::width_scale(4, 1000, 10));
}

TEST(SupLin, LevelCount) {
    EXPECT_EQ(SupLinImed(1000, 2).num_levels(), 7u);
    EXPECT_EQ(SupLinImed(10000, 2).num_levels(), 10u);
    EXPECT_EQ(SupLinImed(1, 2).num_levels(), 1u);
    EXPECT_THROW(SupLinImed(0, 2), ConfigError);
}

TEST(SupLin, FirstRoundIsCaseThreeAtLevelOne) {
    SupLinImed p(1000, 2);
    std::vector<Vector> xs;
    for (int k = 0; k < 10; ++k) xs.push_back(v2(std::cos(0.3 * k), std::sin(0.3 * k)));
    Rng rng(0);
    const auto sel = p.select(make_arms(xs), rng);
    ASSERT_TRUE(sel.suplin.has_value());
    EXPECT_EQ(sel.suplin->case_taken, 3);
    EXPECT_EQ(sel.suplin->level, 1u);
    EXPECT_EQ(sel.arm_id, 0);
    p.observe(xs[0], 1.0);
    EXPECT_EQ(p.level_rounds()[0], std::vector<std::size_t>{1});
}

TEST(SupLin, LevelFilterKeepsEveryArmWithinTwoToOneMinusS) {
    // At s = 1 the cutoff is max - 1 = 0, so all three survive.
    EXPECT_EQ(SupLinImed::level_filter({1.0, 0.9, 0.2}, 1), (std::vector<std::size_t>{0, 1, 2}));
    // At s = 3 the cutoff is 1 - 0.25 = 0.75.
    EXPECT_EQ(SupLinImed::level_filter({1.0, 0.9, 0.2}, 3), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(SupLinImed::level_filter({0.5}, 4), (std::vector<std::size_t>{0}));
}

TEST(SupLin, IdenticalArmsWithTinyWidthsPickLowestId) {
    // Widths start at alpha * 1e-3, already below 1/sqrt(T): Case 1 from round one.
    const std::size_t T = 50;
    SupLinImed p(T, 1);
    const Vector x = Vector::Constant(1, 1e-3);
    const auto arms = make_arms({x, x, x});
    Rng rng(0);
    for (std::size_t t = 1; t <= T; ++t) {
        const auto sizes_before = p.level_rounds();
        const auto sel = p.select(arms, rng);
        p.observe(arms.arms[sel.position].x, 0.5);
        ASSERT_EQ(sel.suplin->case_taken, 1);
        EXPECT_EQ(sel.suplin->level, 1u);
        EXPECT_EQ(sel.arm_id, 0);
        EXPECT_EQ(p.level_rounds(), sizes_before);
    }
}

TEST(SupLin, MidSizedWidthsDescendOneLevel) {
    // alpha = sqrt(0.5 ln 400) at t = 1, so w ~ 0.35: below 1/2, above 1/4.
    SupLinImed p(50, 1);
    const Vector x = Vector::Constant(1, 0.2);
    Rng rng(0);
    const auto sel = p.select(make_arms({x, x}), rng);
    EXPECT_EQ(sel.suplin->case_taken, 3);
    EXPECT_EQ(sel.suplin->level, 2u);
    EXPECT_EQ(sel.suplin->iterations, 2u);
    p.observe(x, 1.0);
    EXPECT_TRUE(p.level_rounds()[0].empty());
    EXPECT_EQ(p.level_rounds()[1].size(), 1u);
}

TEST(SupLin, UnitContextsNeverReachCaseOne) {
    // w^2 = alpha^2 / (1 + n) <= 1/T would need n >= alpha^2 T - 1 > T.
    const std::size_t T = 400;
    SupLinImed p(T, 1);
    const auto arms = make_arms({Vector::Ones(1), Vector::Ones(1)});
    Rng rng(0);
    for (std::size_t t = 1; t <= T; ++t) {
        const auto sel = p.select(arms, rng);
        p.observe(arms.arms[sel.position].x, 0.0);
        ASSERT_EQ(sel.suplin->case_taken, 3);
    }
}

TEST(SupLinProperty, StructuralInvariantsOnSyntheticRun) {
    const std::size_t T = 3000;
    SyntheticEnvironment env(10, 2);
    SupLinImed p(T, 2);
    std::size_t total_psi = 0;
    RunOptions opt;
    opt.on_round = [&](std::size_t t, const Round&, const Selection& sel, double, const Policy&) {
        ASSERT_TRUE(sel.suplin.has_value());
        const auto& st = *sel.suplin;
        ASSERT_TRUE(st.case_taken == 1 || st.case_taken == 3) << "round " << t;
        ASSERT_GE(st.iterations, 1u);
        ASSERT_LE(st.iterations, p.num_levels());
        std::size_t psi = 0;
        for (const auto& r : p.level_rounds()) psi += r.size();
        if (st.case_taken == 3) {
            ASSERT_EQ(psi, total_psi + 1);
            ASSERT_EQ(p.level_rounds()[st.level - 1].back(), t);
        } else {
            ASSERT_EQ(psi, total_psi);
            for (double w : st.widths) ASSERT_LE(w, 1.0 / std::sqrt(static_cast<double>(T)));
        }
        total_psi = psi;
    };
    run_one(env, p, T, 9, opt);
}
