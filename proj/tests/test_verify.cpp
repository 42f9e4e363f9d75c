#include <gtest/gtest.h>

#include "linimed/harness.hpp"
#include "linimed/verify.hpp"

using namespace linimed;
using namespace linimed::verify;

TEST(GaussJordan, InvertsKnownMatrix) {
    Matrix a(2, 2);
    a << 4, 7, 2, 6;
    Matrix expected(2, 2);
    expected << 0.6, -0.7, -0.2, 0.4;
    EXPECT_LT((gauss_jordan_inverse(a) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CheckInverse, EmptyTraceHasZeroDeviation) { EXPECT_EQ(check_inverse(3, 1.0, {}).max_deviation(), 0.0); }

TEST(CheckInverse, RandomTrace) {
    const auto rep = check_inverse(10, 1.0, random_trace(10, 500, 1));
    EXPECT_LT(rep.max_deviation(), 1e-8);
}

TEST(CheckInverse, NearCollinearTrace) {
    const auto trace = collinear_trace(5, 500, 2);
    const double lambda = 1e-4;
    Matrix gram = lambda * Matrix::Identity(5, 5);
    for (const auto& o : trace) gram += o.x * o.x.transpose();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    const double cond = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
    EXPECT_GT(cond, 1e5);
    EXPECT_LT(check_inverse(5, lambda, trace).max_deviation(), 1e-5);
}

TEST(Coverage, GammaOneStillARate) {
    CoverageSetup s;
    s.gamma = 1.0;
    s.trials = 200;
    const auto rep = check_coverage(s);
    EXPECT_GE(rep.rate, 0.0);
    EXPECT_LE(rep.rate, 1.0);
    EXPECT_TRUE(rep.passed());
}

TEST(Coverage, NominalSetupPasses) {
    CoverageSetup s;
    s.seed = 4;
    const auto rep = check_coverage(s);
    EXPECT_EQ(rep.trials, 1000u);
    EXPECT_NEAR(rep.mc_stderr, std::sqrt(0.05 * 0.95 / 1000), 1e-15);
    EXPECT_TRUE(rep.passed()) << "rate " << rep.rate;
    EXPECT_LE(rep.rate, 0.071);
}

TEST(Coverage, NoiselessDataNeverViolates) {
    CoverageSetup s;
    s.data_noise_R = 0.0;
    s.trials = 300;
    const auto rep = check_coverage(s);
    EXPECT_EQ(rep.violations, 0u);
    EXPECT_LT(rep.max_ratio, 1.0);
}

TEST(Coverage, UnderstatedRadiusIsCaught) {
    // beta built for R = 0.001 while the data has R = 0.5 must fail.
    CoverageSetup s;
    s.noise_R = 0.001;
    s.data_noise_R = 0.5;
    s.trials = 200;
    EXPECT_FALSE(check_coverage(s).passed());
}

TEST(Potential, RepeatedUnitContext) {
    const std::size_t T = 50;
    const Matrix chosen = Matrix::Constant(1, static_cast<Eigen::Index>(T), 1.0);
    const auto reps = check_potential(chosen, 1.0, 1.0, {0.5});
    ASSERT_EQ(reps.size(), 1u);
    // ||x||^2_{V^-1} before step n is 1/n: 1 and 0.5 reach m = 0.5.
    EXPECT_EQ(reps[0].observed_count, 2u);
    EXPECT_TRUE(reps[0].holds());
    EXPECT_NEAR(potential_bound(2, 1.0, 1.0, 0.5), 24.0 * std::log(5.0), 1e-12);
    EXPECT_NEAR(potential_bound(2, 1.0, 1.0, 0.5), 38.6, 0.05);
}

TEST(Potential, LargeThresholdCountsNothing) {
    Matrix chosen = Matrix::Random(3, 40);
    for (Eigen::Index t = 0; t < chosen.cols(); ++t) chosen.col(t).normalize();
    const auto reps = check_potential(chosen, 1.0, 1.0, {2.0});
    EXPECT_EQ(reps[0].observed_count, 0u);
}

TEST(Potential, EooTrajectoryPassesEveryGridPoint) {
    EndOfOptimismEnvironment env(0.01);
    for (Mode m : {Mode::LinUCB, Mode::LinIMED3}) {
        auto cfg = presets::synthetic(m, 10000);
        cfg.alpha_scale = presets::tuned_alpha(EnvKind::Synthetic, m);
        RidgePolicy p(cfg, 2);
        RunOptions opt;
        opt.record_contexts = true;
        const auto traj = run_one(env, p, 10000, 5, opt);
        const auto reps = check_potential(traj.chosen, cfg.lambda, env.bound_L(), default_potential_grid());
        ASSERT_EQ(reps.size(), 5u);
        for (const auto& r : reps) EXPECT_TRUE(r.holds()) << "m=" << r.m << " count " << r.observed_count;
    }
}

TEST(IndexOracle, TwoArmExample) {
    IndexTuple t{{0, 1}, {1.0, 0.5}, {2.0, 1.5}, {1.0, 1.0}};
    const auto ref = oracle_indices(t, Mode::LinIMED1, 1000, 30);
    EXPECT_NEAR(ref.index[0], 0.0, 1e-15);
    EXPECT_NEAR(ref.index[1], 0.25, 1e-15);
    EXPECT_TRUE(check_index_oracle(t, Mode::LinIMED1).agree);
}

TEST(IndexOracle, AllEqualArmsPickAnchor) {
    IndexTuple t{{0, 1, 2}, {0.3, 0.3, 0.3}, {0.8, 0.8, 0.8}, {0.25, 0.25, 0.25}};
    for (Mode m : {Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3}) {
        EXPECT_EQ(oracle_indices(t, m, 1000, 30).chosen, 0u);
        EXPECT_TRUE(check_index_oracle(t, m).agree);
    }
}

TEST(IndexOracle, RandomTuplesAgree) {
    for (Mode m : {Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3}) {
        const auto rep = check_index_oracle_random(m, 1000, 17);
        EXPECT_EQ(rep.tuples, 1000u);
        EXPECT_EQ(rep.disagreements, 0u) << mode_name(m);
    }
}

TEST(IndexOracle, DetectsAWrongIndex) {
    // Flipping which arm is the anchor must be visible to the oracle.
    IndexTuple t{{0, 1}, {0.5, 1.0}, {1.0, 1.5}, {1.0, 1.0}};
    auto ref = oracle_indices(t, Mode::LinIMED1, 1000, 30);
    EXPECT_EQ(ref.chosen, 1u);
    EXPECT_NEAR(ref.index[0], 0.25, 1e-15);
}
