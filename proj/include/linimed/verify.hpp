#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "linimed/config.hpp"
#include "linimed/policies.hpp"
#include "linimed/ridge.hpp"

// Oracles in this header recompute what the library computes along a
// separate path: dense Gauss-Jordan inversion instead of rank-1 updates, and
// a line-by-line index transcription that shares no code with policies.hpp.
namespace linimed::verify {

struct Observation {
    Vector x;
    double y = 0.0;
};

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
inline Matrix gauss_jordan_inverse(Matrix a) {
    const Eigen::Index n = a.rows();
    Matrix inv = Matrix::Identity(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == 0.0) throw NumericError("gauss_jordan_inverse: singular matrix");
        a.row(col).swap(a.row(pivot));
        inv.row(col).swap(inv.row(pivot));
        const double p = a(col, col);
        a.row(col) /= p;
        inv.row(col) /= p;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            a.row(r) -= f * a.row(col);
            inv.row(r) -= f * inv.row(col);
        }
    }
    return inv;
}

struct InverseReport {
    std::size_t steps = 0;
    double inverse_dev = 0.0;      // max |gram_inv - oracle inverse|
    double estimate_dev = 0.0;     // max |estimate - oracle estimate|
    double mahalanobis_dev = 0.0;  // max |x^T gram_inv x - x^T oracle x|
    double identity_dev = 0.0;     // max |gram * gram_inv - I|
    double max_deviation() const { return std::max({inverse_dev, estimate_dev, mahalanobis_dev}); }
};

/// Replays `trace` through RidgeState and, after every step, compares it with
/// a from-scratch inverse of lambda*I + sum x x^T.
inline InverseReport check_inverse(std::size_t dim, double lambda, const std::vector<Observation>& trace) {
    InverseReport rep;
    RidgeState state(dim, lambda);
    Matrix gram = lambda * Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    Vector moment = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& obs : trace) {
        state.update(obs.x, obs.y);
        gram += obs.x * obs.x.transpose();
        moment += obs.y * obs.x;
        const Matrix oracle = gauss_jordan_inverse(gram);
        const Vector est = oracle * moment;
        rep.inverse_dev = std::max(rep.inverse_dev, (state.gram_inv() - oracle).cwiseAbs().maxCoeff());
        rep.estimate_dev = std::max(rep.estimate_dev, (state.estimate() - est).cwiseAbs().maxCoeff());
        rep.mahalanobis_dev =
            std::max(rep.mahalanobis_dev, std::abs(state.mahalanobis_sq(obs.x) - obs.x.dot(oracle * obs.x)));
        const Matrix eye = Matrix::Identity(gram.rows(), gram.cols());
        rep.identity_dev = std::max(rep.identity_dev, (state.gram() * state.gram_inv() - eye).cwiseAbs().maxCoeff());
        ++rep.steps;
    }
    return rep;
}

inline std::vector<Observation> random_trace(std::size_t dim, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Observation> trace(n);
    for (auto& o : trace) {
        o.x = Vector(static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < o.x.size(); ++i) o.x[i] = normal(rng);
        o.x /= std::max(1.0, o.x.norm());
        o.y = normal(rng);
    }
    return trace;
}

/// Contexts packed around one direction: every x is u + 1e-3 * noise. With a
/// small lambda (1e-4) V ends up with a condition number near 1e6.
inline std::vector<Observation> collinear_trace(std::size_t dim, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector u = Vector::Ones(static_cast<Eigen::Index>(dim)).normalized();
    std::vector<Observation> trace(n);
    for (auto& o : trace) {
        o.x = u;
        for (Eigen::Index i = 0; i < o.x.size(); ++i) o.x[i] += 1e-3 * normal(rng);
        o.y = normal(rng);
    }
    return trace;
}

struct CoverageReport {
    std::size_t trials = 0;
    std::size_t violations = 0;  // trials where some round left the ellipsoid
    double gamma_nominal = 0.0;
    double rate = 0.0;
    double mc_stderr = 0.0;
    std::size_t rounds = 0;
    std::size_t round_violations = 0;
    double max_ratio = 0.0;  // max over rounds of ||theta_hat - theta*||_V / sqrt(beta)
    bool passed() const { return rate <= gamma_nominal + 3.0 * mc_stderr; }
};

struct CoverageSetup {
    std::size_t dim = 2;
    std::size_t horizon_T = 200;
    double gamma = 0.05;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    double lambda = 1.0;
    double bound_S = 1.0;
    double bound_L = 1.0;
    double noise_R = 0.1;       // used inside beta
    double data_noise_R = 0.1;  // actual noise level of the simulated rewards
};

/// Monte-Carlo check of the self-normalized confidence ellipsoid with a
/// round-robin schedule over e_1..e_d and the normalized all-ones vector.
/// theta* is drawn per trial uniformly on the sphere of radius S.
inline CoverageReport check_coverage(const CoverageSetup& s) {
    PolicyConfig cfg;
    cfg.lambda = s.lambda;
    cfg.bound_S = s.bound_S;
    cfg.bound_L = s.bound_L;
    cfg.noise_R = s.noise_R;
    cfg.gamma_schedule = GammaSchedule::constant(s.gamma);

    const auto d = static_cast<Eigen::Index>(s.dim);
    std::vector<Vector> schedule;
    for (Eigen::Index i = 0; i < d; ++i) schedule.push_back(s.bound_L * Vector::Unit(d, i));
    schedule.push_back(s.bound_L * Vector::Ones(d).normalized());

    std::vector<double> radius(s.horizon_T);
    for (std::size_t t = 0; t < s.horizon_T; ++t) radius[t] = std::sqrt(beta(t, s.dim, cfg));

    CoverageReport rep;
    rep.trials = s.trials;
    rep.gamma_nominal = s.gamma;
    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t trial = 0; trial < s.trials; ++trial) {
        Vector theta(d);
        for (Eigen::Index i = 0; i < d; ++i) theta[i] = normal(rng);
        theta *= s.bound_S / theta.norm();
        Matrix gram = s.lambda * Matrix::Identity(d, d);
        Vector moment = Vector::Zero(d);
        bool violated = false;
        for (std::size_t t = 0; t < s.horizon_T; ++t) {
            // Ellipsoid of round t+1 is built from the first t observations.
            const Vector est = gram.ldlt().solve(moment);
            const Vector err = est - theta;
            const double dist = std::sqrt(std::max(0.0, err.dot(gram * err)));
            rep.max_ratio = std::max(rep.max_ratio, dist / radius[t]);
            ++rep.rounds;
            if (dist > radius[t]) {
                ++rep.round_violations;
                violated = true;
            }
            const Vector& x = schedule[t % schedule.size()];
            const double y = theta.dot(x) + s.data_noise_R * normal(rng);
            gram += x * x.transpose();
            moment += y * x;
        }
        rep.violations += violated ? 1 : 0;
    }
    rep.rate = s.trials ? static_cast<double>(rep.violations) / static_cast<double>(s.trials) : 0.0;
    rep.mc_stderr = s.trials ? std::sqrt(s.gamma * (1.0 - s.gamma) / static_cast<double>(s.trials)) : 0.0;
    return rep;
}

struct PotentialReport {
    double m = 0.0;
    std::size_t observed_count = 0;
    double bound = 0.0;
    bool holds() const { return static_cast<double>(observed_count) <= bound; }
};

inline const std::vector<double>& default_potential_grid() {
    static const std::vector<double> grid = {0.01, 0.1, 0.5, 1.0, 2.0};
    return grid;
}

inline double potential_bound(std::size_t dim, double lambda, double bound_L, double m) {
    return 6.0 * static_cast<double>(dim) / m * std::log(1.0 + 2.0 * bound_L * bound_L / (lambda * m));
}

/// Counts rounds with ||X_t||^2_{V_{t-1}^{-1}} >= m for each m, V_0 = lambda I,
/// along the chosen contexts (columns of `chosen`).
inline std::vector<PotentialReport> check_potential(const Matrix& chosen, double lambda, double bound_L,
                                                    const std::vector<double>& m_grid = default_potential_grid()) {
    const Eigen::Index d = chosen.rows();
    std::vector<PotentialReport> reps;
    for (double m : m_grid) reps.push_back({m, 0, potential_bound(static_cast<std::size_t>(d), lambda, bound_L, m)});
    Matrix gram = lambda * Matrix::Identity(d, d);
    for (Eigen::Index t = 0; t < chosen.cols(); ++t) {
        const Vector x = chosen.col(t);
        const double q = x.dot(gram.ldlt().solve(x));
        for (auto& r : reps)
            if (q >= r.m) ++r.observed_count;
        gram += x * x.transpose();
    }
    return reps;
}

struct IndexTuple {
    std::vector<int> ids;
    std::vector<double> mean;
    std::vector<double> ucb;
    std::vector<double> width_sq;
};

struct OracleIndices {
    std::vector<double> index;
    std::size_t chosen = 0;
};

/// Algorithm-1 index lines written out directly: anchor by argmax of mean
/// (x = 1, 2) or UCB (x = 3), then the per-mode anchor formula or the
/// gap^2 / w - log w formula. Ties go to the lowest id.
inline OracleIndices oracle_indices(const IndexTuple& in, Mode mode, double horizon_T, double C) {
    const std::size_t K = in.ids.size();
    const int x = mode == Mode::LinIMED1 ? 1 : mode == Mode::LinIMED2 ? 2 : 3;
    std::vector<double> score(K);
    for (std::size_t a = 0; a < K; ++a) score[a] = (x == 1 || x == 2) ? in.mean[a] : in.ucb[a];
    std::size_t anchor = 0;
    for (std::size_t a = 1; a < K; ++a)
        if (score[a] > score[anchor] || (score[a] == score[anchor] && in.ids[a] < in.ids[anchor])) anchor = a;
    double max_gap_sq = 0.0;
    std::vector<double> gap(K);
    for (std::size_t a = 0; a < K; ++a) {
        gap[a] = score[anchor] - score[a];
        max_gap_sq = std::max(max_gap_sq, gap[a] * gap[a]);
    }
    OracleIndices out;
    out.index.resize(K);
    for (std::size_t a = 0; a < K; ++a) {
        const double w = in.width_sq[a];
        if (!(w > 0.0)) {
            out.index[a] = std::numeric_limits<double>::infinity();
            continue;
        }
        if (a == anchor) {
            const double line9 = -std::log(w);
            const double line10 = std::min(std::log(horizon_T), -std::log(w));
            // log(C / 0) is +inf, so the minimum falls back to -log w.
            const double line11 = std::min(std::log(C / max_gap_sq), -std::log(w));
            out.index[a] = x == 1 ? line9 : x == 2 ? line10 : line11;
        } else {
            out.index[a] = gap[a] * gap[a] / w - std::log(w);
        }
    }
    for (std::size_t a = 1; a < K; ++a)
        if (out.index[a] < out.index[out.chosen] ||
            (out.index[a] == out.index[out.chosen] && in.ids[a] < in.ids[out.chosen]))
            out.chosen = a;
    return out;
}

struct IndexCheck {
    bool agree = true;
    double max_abs_diff = 0.0;
};

inline IndexCheck check_index_oracle(const IndexTuple& in, Mode mode, std::size_t horizon_T = 1000, double C = 30.0) {
    PolicyConfig cfg;
    cfg.horizon_T = horizon_T;
    cfg.constant_C = C;
    std::vector<ArmStats> stats(in.ids.size());
    for (std::size_t a = 0; a < stats.size(); ++a) {
        stats[a].arm_id = in.ids[a];
        stats[a].mean = in.mean[a];
        stats[a].ucb = in.ucb[a];
        stats[a].width_sq = in.width_sq[a];
    }
    const auto lib = linimed_indices(mode, stats, cfg);
    const auto ref = oracle_indices(in, mode, static_cast<double>(horizon_T), C);
    IndexCheck chk;
    for (std::size_t a = 0; a < stats.size(); ++a) {
        const double l = lib[a].index, r = ref.index[a];
        if (std::isinf(l) || std::isinf(r)) {
            if (l != r) chk.agree = false;
            continue;
        }
        const double diff = std::abs(l - r);
        chk.max_abs_diff = std::max(chk.max_abs_diff, diff);
        if (diff > 1e-12 * std::max(1.0, std::abs(r))) chk.agree = false;
    }
    if (argmin_index(lib) != ref.chosen) chk.agree = false;
    return chk;
}

inline IndexTuple random_index_tuple(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> k_dist(1, 6);
    std::uniform_real_distribution<double> mean(-1.0, 1.0), logw(-8.0, 2.0), coin(0.0, 1.0);
    IndexTuple t;
    const int K = k_dist(rng);
    for (int a = 0; a < K; ++a) {
        t.ids.push_back(a);
        // Occasional exact ties exercise the lowest-id rules.
        const double m = (a > 0 && coin(rng) < 0.15) ? t.mean.back() : mean(rng);
        const double w = (a > 0 && coin(rng) < 0.15) ? t.width_sq.back() : std::exp(logw(rng));
        t.mean.push_back(m);
        t.width_sq.push_back(w);
        t.ucb.push_back(m + std::sqrt(w));
    }
    return t;
}

struct IndexSweepReport {
    std::size_t tuples = 0;
    std::size_t disagreements = 0;
    double max_abs_diff = 0.0;
};

inline IndexSweepReport check_index_oracle_random(Mode mode, std::size_t tuples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    IndexSweepReport rep;
    for (std::size_t i = 0; i < tuples; ++i) {
        const auto t = random_index_tuple(rng);
        const auto chk = check_index_oracle(t, mode);
        ++rep.tuples;
        rep.disagreements += chk.agree ? 0 : 1;
        rep.max_abs_diff = std::max(rep.max_abs_diff, chk.max_abs_diff);
    }
    return rep;
}

}  // namespace linimed::verify
