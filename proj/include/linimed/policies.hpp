#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "linimed/arms.hpp"
#include "linimed/config.hpp"
#include "linimed/errors.hpp"
#include "linimed/ridge.hpp"

namespace linimed {

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-arm quantities of one round. For LinIMED, `index` is I_{t,a} and the
/// pulled arm minimizes it. LinUCB and LinTS store the negated score so the
/// same argmin rule applies to every policy.
struct ArmStats {
    int arm_id = 0;
    double mean = 0.0;
    double ucb = 0.0;
    double width_sq = 0.0;  // alpha^2 * beta * ||x||^2_{V^-1}
    double gap = 0.0;
    double index = 0.0;
};

// Strict ordering used for every argmin: smaller index first, then lower id.
inline bool index_less(const ArmStats& a, const ArmStats& b) {
    if (a.index != b.index) return a.index < b.index;
    return a.arm_id < b.arm_id;
}

inline std::size_t argmin_index(const std::vector<ArmStats>& stats) {
    if (stats.empty()) throw UsageError("argmin over an empty arm list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < stats.size(); ++i)
        if (index_less(stats[i], stats[best])) best = i;
    return best;
}

namespace detail {

// argmax of key(stats[i]); ties go to the lowest arm id.
template <class Key>
std::size_t argmax_by(const std::vector<ArmStats>& stats, Key key) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < stats.size(); ++i) {
        const double a = key(stats[i]), b = key(stats[best]);
        if (a > b || (a == b && stats[i].arm_id < stats[best].arm_id)) best = i;
    }
    return best;
}

inline double neg_log(double w) { return w > 0.0 ? -std::log(w) : kInf; }

}  // namespace detail

/// Fills gap and index for every arm from mean, ucb and width_sq.
///
/// The anchor (argmax mean for modes 1-2, argmax UCB for mode 3) gets
///   mode 1: -log w
///   mode 2: min(log T, -log w)
///   mode 3: min(log(C / max gap^2), -log w)
/// and every other arm gets gap^2 / w - log w. A zero width yields +inf for
/// either formula, so zero contexts are never preferred.
inline std::vector<ArmStats> linimed_indices(Mode mode, std::vector<ArmStats> stats,
                                             const PolicyConfig& cfg) {
    if (!is_linimed(mode)) throw UsageError("linimed_indices: mode is not a LinIMED variant");
    if (stats.empty()) throw UsageError("linimed_indices: empty arm list");

    const bool use_ucb = mode == Mode::LinIMED3;
    auto key = [use_ucb](const ArmStats& s) { return use_ucb ? s.ucb : s.mean; };
    const std::size_t anchor = detail::argmax_by(stats, key);
    const double top = key(stats[anchor]);

    double max_gap_sq = 0.0;
    for (auto& s : stats) {
        s.gap = std::max(0.0, top - key(s));
        max_gap_sq = std::max(max_gap_sq, s.gap * s.gap);
    }

    for (std::size_t i = 0; i < stats.size(); ++i) {
        auto& s = stats[i];
        const double explore = detail::neg_log(s.width_sq);
        if (s.width_sq <= 0.0) {
            s.index = kInf;
        } else if (i == anchor) {
            switch (mode) {
                case Mode::LinIMED1: s.index = explore; break;
                case Mode::LinIMED2:
                    s.index = std::min(std::log(static_cast<double>(cfg.horizon_T)), explore);
                    break;
                default:
                    s.index = max_gap_sq > 0.0
                                  ? std::min(std::log(cfg.constant_C / max_gap_sq), explore)
                                  : explore;
                    break;
            }
        } else {
            s.index = s.gap * s.gap / s.width_sq + explore;
        }
    }
    return stats;
}

/// One level-loop step record of SupLinIMED, kept for tracing and invariant checks.
struct SupLinStep {
    int case_taken = 0;              // 1, 2 or 3 for the terminal level
    std::size_t level = 1;           // 1-based level where the arm was chosen
    std::size_t iterations = 0;      // number of levels visited
    std::vector<int> survivors;      // arm ids in the final candidate set
    std::vector<double> widths;      // their widths w^s at the final level
};

struct Selection {
    int arm_id = 0;
    std::size_t position = 0;  // index into ArmSet::arms
    std::vector<ArmStats> stats;
    std::optional<SupLinStep> suplin;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual Selection select(const ArmSet& arms, Rng& rng) = 0;
    virtual void observe(const Vector& x, double reward) = 0;
    virtual Mode mode() const = 0;
    virtual std::size_t dim() const = 0;
    // Rounds observed so far (t - 1 while choosing round t).
    std::size_t rounds() const { return rounds_; }

protected:
    void check_arms(const ArmSet& arms) const {
        if (arms.empty()) throw UsageError("select: empty arm set");
        for (const auto& a : arms.arms)
            if (static_cast<std::size_t>(a.x.size()) != dim())
                throw UsageError("select: context dimension does not match the policy");
    }
    std::size_t rounds_ = 0;
};

/// Algorithm-1 family plus the LinUCB and LinTS baselines: a single ridge
/// estimate of theta, confidence width alpha * sqrt(beta_{t-1}).
class RidgePolicy final : public Policy {
public:
    RidgePolicy(const PolicyConfig& cfg, std::size_t dim) : cfg_(cfg), ridge_(dim, cfg.lambda) {
        cfg_.validate();
        if (!(is_linimed(cfg.mode) || cfg.mode == Mode::LinUCB || cfg.mode == Mode::LinTS))
            throw ConfigError("RidgePolicy: unsupported mode");
    }

    Mode mode() const override { return cfg_.mode; }
    std::size_t dim() const override { return ridge_.dim(); }
    const RidgeState& ridge() const { return ridge_; }
    const PolicyConfig& config() const { return cfg_; }

    double current_beta() const { return beta(rounds_, dim(), cfg_); }

    // mean, width_sq and ucb for every arm; gap and index left at zero.
    std::vector<ArmStats> base_stats(const ArmSet& arms) const {
        const double scaled_beta = cfg_.alpha_scale * cfg_.alpha_scale * current_beta();
        std::vector<ArmStats> stats(arms.size());
        for (std::size_t i = 0; i < arms.size(); ++i) {
            const auto& arm = arms.arms[i];
            auto& s = stats[i];
            s.arm_id = arm.id;
            s.mean = ridge_.predict(arm.x);
            s.width_sq = scaled_beta * ridge_.mahalanobis_sq(arm.x);
            s.ucb = s.mean + std::sqrt(s.width_sq);
        }
        return stats;
    }

    Selection select(const ArmSet& arms, Rng& rng) override {
        check_arms(arms);
        Selection sel;
        auto stats = base_stats(arms);
        switch (cfg_.mode) {
            case Mode::LinUCB:
                for (auto& s : stats) s.index = -s.ucb;
                break;
            case Mode::LinTS: {
                const Vector theta = sample_theta(rng);
                for (std::size_t i = 0; i < stats.size(); ++i) stats[i].index = -theta.dot(arms.arms[i].x);
                break;
            }
            default: stats = linimed_indices(cfg_.mode, std::move(stats), cfg_); break;
        }
        sel.position = argmin_index(stats);
        sel.arm_id = stats[sel.position].arm_id;
        sel.stats = std::move(stats);
        return sel;
    }

    void observe(const Vector& x, double reward) override {
        ridge_.update(x, reward);
        ++rounds_;
    }

    /// theta_hat + alpha sqrt(beta) * chol(V^-1) z with z ~ N(0, I).
    Vector sample_theta(Rng& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector z(dim());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
        const double scale = cfg_.alpha_scale * std::sqrt(current_beta());
        if (scale == 0.0) return ridge_.estimate();
        const Eigen::LLT<Matrix> llt(ridge_.gram_inv());
        if (llt.info() != Eigen::Success) throw NumericError("LinTS: V^-1 is not positive definite");
        const Vector step = llt.matrixL() * z;
        return ridge_.estimate() + scale * step;
    }

private:
    PolicyConfig cfg_;
    RidgeState ridge_;
};

/// Arm-set-independent random baseline used as the CTR floor.
class UniformPolicy final : public Policy {
public:
    explicit UniformPolicy(std::size_t dim) : dim_(dim) {}
    Mode mode() const override { return Mode::Uniform; }
    std::size_t dim() const override { return dim_; }
    Selection select(const ArmSet& arms, Rng& rng) override {
        check_arms(arms);
        std::uniform_int_distribution<std::size_t> pick(0, arms.size() - 1);
        Selection sel;
        sel.position = pick(rng);
        sel.arm_id = arms.arms[sel.position].id;
        return sel;
    }
    void observe(const Vector&, double) override { ++rounds_; }

private:
    std::size_t dim_;
};

/// Level-layered IMED for finite arm sets. Each level keeps its own ridge
/// estimate (lambda = 1) over the rounds that were assigned to it; a round
/// is assigned only when it is chosen for exploration at that level.
class SupLinImed final : public Policy {
public:
    SupLinImed(std::size_t horizon_T, std::size_t dim) : horizon_(horizon_T), dim_(dim) {
        if (horizon_T == 0) throw ConfigError("SupLinIMED: horizon must be positive");
        if (dim == 0) throw ConfigError("SupLinIMED: dimension must be >= 1");
        num_levels_ = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                   std::ceil(std::log(static_cast<double>(horizon_T)))));
        levels_.assign(num_levels_, RidgeState(dim, 1.0));
        level_rounds_.assign(num_levels_, {});
    }

    Mode mode() const override { return Mode::SupLinIMED; }
    std::size_t dim() const override { return dim_; }
    std::size_t num_levels() const { return num_levels_; }
    std::size_t horizon() const { return horizon_; }
    const std::vector<RidgeState>& levels() const { return levels_; }
    const std::vector<std::vector<std::size_t>>& level_rounds() const { return level_rounds_; }
    std::optional<std::size_t> pending_level() const { return pending_level_; }

    // gamma = 1/(2 t^2), alpha = sqrt(0.5 ln(2 T K / gamma)).
    static double width_scale(std::size_t t, std::size_t horizon_T, std::size_t K) {
        const double tt = static_cast<double>(t);
        const double gamma = 1.0 / (2.0 * tt * tt);
        return std::sqrt(0.5 * std::log(2.0 * static_cast<double>(horizon_T) * static_cast<double>(K) / gamma));
    }

    /// Case-2 elimination at level s: positions whose Y_hat + w is within
    /// 2^{1-s} of the largest one.
    static std::vector<std::size_t> level_filter(const std::vector<double>& upper, std::size_t s) {
        const double top = *std::max_element(upper.begin(), upper.end());
        const double cutoff = top - std::ldexp(1.0, 1 - static_cast<int>(s));
        std::vector<std::size_t> keep;
        for (std::size_t j = 0; j < upper.size(); ++j)
            if (upper[j] >= cutoff) keep.push_back(j);
        return keep;
    }

    Selection select(const ArmSet& arms, Rng&) override {
        check_arms(arms);
        const std::size_t t = rounds_ + 1;
        const std::size_t K = arms.size();
        const double alpha = width_scale(t, horizon_, K);
        const double case1_cut = 1.0 / std::sqrt(static_cast<double>(horizon_));

        std::vector<std::size_t> candidates(K);
        for (std::size_t i = 0; i < K; ++i) candidates[i] = i;

        SupLinStep step;
        for (std::size_t s = 1;; ++s) {
            if (s > num_levels_) throw std::logic_error("SupLinIMED: level loop exceeded S'");
            step.iterations = s;
            const RidgeState& level = levels_[s - 1];
            std::vector<double> mean(candidates.size()), width(candidates.size());
            for (std::size_t j = 0; j < candidates.size(); ++j) {
                const Vector& x = arms.arms[candidates[j]].x;
                mean[j] = level.predict(x);
                width[j] = alpha * std::sqrt(level.mahalanobis_sq(x));
            }
            const double level_cut = std::ldexp(1.0, -static_cast<int>(s));
            const bool all_tiny = std::all_of(width.begin(), width.end(), [&](double w) { return w <= case1_cut; });
            const bool all_small =
                std::all_of(width.begin(), width.end(), [&](double w) { return w <= level_cut; });

            auto finish = [&](int which, std::size_t pos, std::vector<ArmStats> stats) {
                step.case_taken = which;
                step.level = s;
                for (std::size_t j = 0; j < candidates.size(); ++j) step.survivors.push_back(arms.arms[candidates[j]].id);
                step.widths = width;
                Selection sel;
                sel.position = pos;
                sel.arm_id = arms.arms[pos].id;
                sel.stats = std::move(stats);
                sel.suplin = std::move(step);
                return sel;
            };

            if (all_tiny) {
                pending_level_.reset();
                std::vector<ArmStats> stats(candidates.size());
                for (std::size_t j = 0; j < candidates.size(); ++j) {
                    stats[j].arm_id = arms.arms[candidates[j]].id;
                    stats[j].mean = mean[j];
                    stats[j].ucb = mean[j] + width[j];
                    stats[j].width_sq = width[j] * width[j];
                }
                stats = case1_indices(std::move(stats));
                const std::size_t j = argmin_index(stats);
                return finish(1, candidates[j], std::move(stats));
            }
            if (all_small) {
                std::vector<double> upper(candidates.size());
                for (std::size_t j = 0; j < candidates.size(); ++j) upper[j] = mean[j] + width[j];
                std::vector<std::size_t> next;
                for (std::size_t j : level_filter(upper, s)) next.push_back(candidates[j]);
                candidates = std::move(next);
                continue;
            }
            // Case 3: the lowest-id arm whose width exceeds 2^{-s}.
            std::optional<std::size_t> pick;
            for (std::size_t j = 0; j < candidates.size(); ++j) {
                if (width[j] > level_cut &&
                    (!pick || arms.arms[candidates[j]].id < arms.arms[candidates[*pick]].id))
                    pick = j;
            }
            pending_level_ = s;
            return finish(3, candidates[*pick], {});
        }
    }

    void observe(const Vector& x, double reward) override {
        if (static_cast<std::size_t>(x.size()) != dim_) throw UsageError("observe: dimension mismatch");
        ++rounds_;
        if (pending_level_) {
            const std::size_t s = *pending_level_;
            levels_[s - 1].update(x, reward);
            level_rounds_[s - 1].push_back(rounds_);
            pending_level_.reset();
        }
    }

    /// Case-1 index: the argmax-mean arm gets min(log 2T, -log w^2), every
    /// other arm (gap / w)^2 - log w^2. Expects width_sq = w^2 and mean set.
    std::vector<ArmStats> case1_indices(std::vector<ArmStats> stats) const {
        const std::size_t anchor = detail::argmax_by(stats, [](const ArmStats& s) { return s.mean; });
        const double top = stats[anchor].mean;
        const double cap = std::log(2.0 * static_cast<double>(horizon_));
        for (std::size_t j = 0; j < stats.size(); ++j) {
            auto& s = stats[j];
            s.gap = std::max(0.0, top - s.mean);
            if (s.width_sq <= 0.0)
                s.index = kInf;
            else if (j == anchor)
                s.index = std::min(cap, -std::log(s.width_sq));
            else
                s.index = s.gap * s.gap / s.width_sq - std::log(s.width_sq);
        }
        return stats;
    }

private:
    std::size_t horizon_;
    std::size_t dim_;
    std::size_t num_levels_ = 1;
    std::vector<RidgeState> levels_;
    std::vector<std::vector<std::size_t>> level_rounds_;
    std::optional<std::size_t> pending_level_;
};

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, std::size_t dim) {
    switch (cfg.mode) {
        case Mode::SupLinIMED: return std::make_unique<SupLinImed>(cfg.horizon_T, dim);
        case Mode::Uniform: return std::make_unique<UniformPolicy>(dim);
        default: return std::make_unique<RidgePolicy>(cfg, dim);
    }
}

}  // namespace linimed
