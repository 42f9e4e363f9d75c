#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string_view>
#include <vector>

#include "linimed/arms.hpp"
#include "linimed/errors.hpp"
#include "linimed/policies.hpp"
#include "linimed/ridge.hpp"

namespace linimed {

enum class EnvKind { Synthetic, EndOfOptimism, MovieLensReplay };

inline std::string_view env_name(EnvKind k) {
    switch (k) {
        case EnvKind::Synthetic: return "synthetic";
        case EnvKind::EndOfOptimism: return "eoo";
        case EnvKind::MovieLensReplay: return "movielens";
    }
    return "?";
}

/// Everything the environment emits for one round. `expected` is hidden from
/// the policy; it carries <theta*, x> (or the deterministic click) per arm.
struct Round {
    ArmSet arms;
    std::vector<double> expected;
    std::size_t best = 0;  // position of a_t*
    std::size_t user = 0;  // replay environments only

    double regret(std::size_t pos) const { return std::max(0.0, expected[best] - expected[pos]); }
};

class Environment {
public:
    virtual ~Environment() = default;
    virtual EnvKind kind() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t num_arms() const = 0;
    // Bound on every emitted ||x||.
    virtual double bound_L() const = 0;
    virtual Round next_round(std::size_t t, Rng& rng) const = 0;
    virtual double draw_reward(const Round& round, std::size_t pos, Rng& rng) const = 0;
};

namespace detail {
inline std::size_t best_position(const std::vector<double>& expected) {
    return static_cast<std::size_t>(std::max_element(expected.begin(), expected.end()) - expected.begin());
}
}  // namespace detail

/// Reward Y = <theta*, x> + eta with eta ~ N(0, R^2).
class LinearEnvironment : public Environment {
public:
    LinearEnvironment(Vector theta_star, double noise_R) : theta_(std::move(theta_star)), noise_R_(noise_R) {
        if (!(noise_R >= 0.0)) throw ConfigError("noise R must be >= 0");
    }

    const Vector& theta_star() const { return theta_; }
    double noise_R() const { return noise_R_; }
    std::size_t dim() const override { return static_cast<std::size_t>(theta_.size()); }

    double expected_reward(const Vector& x) const { return theta_.dot(x); }

    double draw_reward(const Vector& x, Rng& rng) const {
        const double mean = expected_reward(x);
        if (noise_R_ == 0.0) return mean;
        std::normal_distribution<double> noise(0.0, noise_R_);
        return mean + noise(rng);
    }

    double draw_reward(const Round& round, std::size_t pos, Rng& rng) const override {
        return draw_reward(round.arms.arms[pos].x, rng);
    }

protected:
    Round finish(ArmSet arms) const {
        Round r;
        r.expected.reserve(arms.size());
        for (const auto& a : arms.arms) r.expected.push_back(expected_reward(a.x));
        r.best = detail::best_position(r.expected);
        r.arms = std::move(arms);
        return r;
    }

    Vector theta_;
    double noise_R_;
};

/// Varying-arm synthetic instance: theta* = x* = (1/sqrt(d-1), ..., 1/sqrt(d-1), 0),
/// K-2 perturbed copies scaled by (1 - 1/(7+z)) with z ~ U[0, 0.1] drawn per
/// arm per round, and one worst arm e_d.
class SyntheticEnvironment final : public LinearEnvironment {
public:
    SyntheticEnvironment(std::size_t K, std::size_t d, double noise_R = 0.1)
        : LinearEnvironment(best_context(d), noise_R), K_(K) {
        if (K < 3) throw ConfigError("synthetic: K must be >= 3");
    }

    static Vector best_context(std::size_t d) {
        if (d < 2) throw ConfigError("synthetic: d must be >= 2");
        Vector x = Vector::Constant(static_cast<Eigen::Index>(d), 1.0 / std::sqrt(static_cast<double>(d - 1)));
        x[static_cast<Eigen::Index>(d - 1)] = 0.0;
        return x;
    }

    static Vector suboptimal_context(std::size_t d, double z) {
        const double shrink = 1.0 - 1.0 / (7.0 + z);
        Vector x = Vector::Constant(static_cast<Eigen::Index>(d), shrink / std::sqrt(static_cast<double>(d - 1)));
        x[static_cast<Eigen::Index>(d - 1)] = shrink;
        return x;
    }

    EnvKind kind() const override { return EnvKind::Synthetic; }
    std::size_t num_arms() const override { return K_; }
    double bound_L() const override { return std::sqrt(2.0); }

    ArmSet arms(std::size_t t, Rng& rng) const {
        const std::size_t d = dim();
        std::uniform_real_distribution<double> z(0.0, 0.1);
        ArmSet set;
        set.round = t;
        set.arms.reserve(K_);
        set.arms.push_back({0, theta_});
        for (std::size_t i = 1; i + 1 < K_; ++i) set.arms.push_back({static_cast<int>(i), suboptimal_context(d, z(rng))});
        Vector worst = Vector::Zero(static_cast<Eigen::Index>(d));
        worst[static_cast<Eigen::Index>(d - 1)] = 1.0;
        set.arms.push_back({static_cast<int>(K_ - 1), std::move(worst)});
        return set;
    }

    Round next_round(std::size_t t, Rng& rng) const override { return finish(arms(t, rng)); }

private:
    std::size_t K_;
};

/// Fixed three-arm instance with theta* = (1, 0): arms e1, e2 and (1-eps, 2 eps).
class EndOfOptimismEnvironment final : public LinearEnvironment {
public:
    explicit EndOfOptimismEnvironment(double epsilon, double noise_R = 0.1)
        : LinearEnvironment(Vector::Unit(2, 0), noise_R), eps_(epsilon) {
        if (!(epsilon > 0.0)) throw ConfigError("eoo: epsilon must be positive");
        arms_.arms = {{0, Vector::Unit(2, 0)}, {1, Vector::Unit(2, 1)}, {2, Vector(2)}};
        arms_.arms[2].x << 1.0 - epsilon, 2.0 * epsilon;
    }

    double epsilon() const { return eps_; }
    EnvKind kind() const override { return EnvKind::EndOfOptimism; }
    std::size_t num_arms() const override { return 3; }
    double bound_L() const override { return std::sqrt(2.0); }

    ArmSet arms(std::size_t t) const {
        ArmSet set = arms_;
        set.round = t;
        return set;
    }

    Round next_round(std::size_t t, Rng&) const override { return finish(arms(t)); }

private:
    double eps_;
    ArmSet arms_;
};

// Free-function forms.
inline ArmSet synthetic_arms(std::size_t t, std::size_t K, std::size_t d, Rng& rng) {
    return SyntheticEnvironment(K, d).arms(t, rng);
}

inline ArmSet eoo_arms(double epsilon) { return EndOfOptimismEnvironment(epsilon).arms(0); }

inline double draw_reward(const LinearEnvironment& env, const Vector& x, Rng& rng) {
    return env.draw_reward(x, rng);
}

}  // namespace linimed
