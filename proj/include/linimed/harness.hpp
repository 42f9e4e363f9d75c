#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "linimed/config.hpp"
#include "linimed/envs.hpp"
#include "linimed/errors.hpp"
#include "linimed/movielens.hpp"
#include "linimed/policies.hpp"
#include "linimed/seeding.hpp"
#include "linimed/stats.hpp"

namespace linimed {

enum class Metric { CumulativeRegret, CTR };

struct Trajectory {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<double> values;  // metric after each round, length T
    Matrix chosen;               // d x T chosen contexts, when recorded
};

struct AggregateCurve {
    std::string label;
    std::vector<double> mean;
    std::vector<double> std;
    std::size_t n = 0;
};

// A module error raised inside the interaction loop, tagged with its round.
struct RunError : std::runtime_error {
    RunError(std::size_t round, const std::string& what)
        : std::runtime_error("round " + std::to_string(round) + ": " + what), round(round) {}
    std::size_t round;
};

using RoundHook = std::function<void(std::size_t t, const Round&, const Selection&, double reward, const Policy&)>;

struct RunOptions {
    Metric metric = Metric::CumulativeRegret;
    bool record_contexts = false;
    RoundHook on_round;  // called after the policy observed round t
};

/// env emits the arm set, the policy picks, env draws the reward, the policy
/// observes. Environment and policy randomness use separate streams derived
/// from `seed`, so the run is a pure function of its arguments.
inline Trajectory run_one(const Environment& env, Policy& policy, std::size_t T, std::uint64_t seed,
                          const RunOptions& opt = {}) {
    if (policy.dim() != env.dim()) throw UsageError("run_one: policy and environment dimensions differ");
    Trajectory traj;
    traj.seed = seed;
    traj.label = std::string(mode_name(policy.mode()));
    traj.values.reserve(T);
    if (opt.record_contexts) traj.chosen.resize(static_cast<Eigen::Index>(env.dim()), static_cast<Eigen::Index>(T));
    Rng env_rng(stream_seed(seed, 0));
    Rng policy_rng(stream_seed(seed, 1));
    double cumulative = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        try {
            const Round round = env.next_round(t, env_rng);
            const Selection sel = policy.select(round.arms, policy_rng);
            const Vector& x = round.arms.arms[sel.position].x;
            const double reward = env.draw_reward(round, sel.position, env_rng);
            policy.observe(x, reward);
            if (opt.metric == Metric::CumulativeRegret) {
                cumulative += round.regret(sel.position);
                traj.values.push_back(cumulative);
            } else {
                cumulative += reward;
                traj.values.push_back(cumulative / static_cast<double>(t));
            }
            if (opt.record_contexts) traj.chosen.col(static_cast<Eigen::Index>(t - 1)) = x;
            if (opt.on_round) opt.on_round(t, round, sel, reward, policy);
        } catch (const RunError&) {
            throw;
        } catch (const std::exception& e) {
            throw RunError(t, e.what());
        }
    }
    return traj;
}

/// Pointwise mean and sample standard deviation (n - 1) across repeats.
inline AggregateCurve aggregate(std::span<const Trajectory> runs, std::string label = {}) {
    AggregateCurve c;
    c.label = label.empty() && !runs.empty() ? runs.front().label : std::move(label);
    c.n = runs.size();
    if (runs.empty()) return c;
    const std::size_t T = runs.front().values.size();
    for (const auto& r : runs)
        if (r.values.size() != T) throw UsageError("aggregate: trajectories have different lengths");
    c.mean.assign(T, 0.0);
    c.std.assign(T, 0.0);
    const double n = static_cast<double>(runs.size());
    for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (const auto& r : runs) sum += r.values[t];
        const double m = sum / n;
        double ss = 0.0;
        for (const auto& r : runs) ss += (r.values[t] - m) * (r.values[t] - m);
        c.mean[t] = m;
        c.std[t] = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Experiment description and presets

struct EnvSpec {
    EnvKind kind = EnvKind::Synthetic;
    std::size_t K = 10;
    std::size_t d = 2;
    double epsilon = 0.01;
    double noise_R = 0.1;
    std::string ratings_path;
    std::size_t min_ratings = 1;
    bool use_cache = true;
};

struct PolicySpec {
    std::string label;
    PolicyConfig cfg;
    std::vector<double> alpha_grid;  // empty: the experiment grid, else cfg.alpha_scale
};

struct ExperimentSpec {
    EnvSpec env;
    std::vector<PolicySpec> policies;
    std::size_t horizon_T = 1000;
    std::size_t repeats = 1;
    std::uint64_t base_seed = 0;
    std::optional<std::vector<double>> alpha_grid;
    Metric metric = Metric::CumulativeRegret;
    std::size_t threads = 1;
    bool record_contexts = false;

    void validate() const {
        if (repeats == 0) throw ConfigError("repeats must be >= 1");
        if (policies.empty()) throw ConfigError("at least one policy is required");
        auto check_grid = [](const std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!(g[i] > 0.0)) throw ConfigError("alpha grid entries must be positive");
                for (std::size_t j = 0; j < i; ++j)
                    if (g[j] == g[i]) throw ConfigError("alpha grid entries must be distinct");
            }
        };
        if (alpha_grid) {
            if (alpha_grid->empty()) throw ConfigError("alpha grid must not be empty");
            check_grid(*alpha_grid);
        }
        for (std::size_t i = 0; i < policies.size(); ++i) {
            check_grid(policies[i].alpha_grid);
            for (std::size_t j = 0; j < i; ++j)
                if (policies[j].label == policies[i].label) throw ConfigError("duplicate policy label " + policies[i].label);
        }
    }

    std::vector<double> grid_for(const PolicySpec& p) const {
        if (!p.alpha_grid.empty()) return p.alpha_grid;
        if (alpha_grid) return *alpha_grid;
        return {p.cfg.alpha_scale};
    }
};

namespace presets {

// lambda = L^2 = 2, S = 1, R = 0.1, gamma_n = 1/(1+n)^2, C = 30.
inline PolicyConfig synthetic(Mode mode, std::size_t T) {
    PolicyConfig c;
    c.lambda = 2.0;
    c.bound_L = std::sqrt(2.0);
    c.bound_S = 1.0;
    c.noise_R = 0.1;
    c.gamma_schedule = GammaSchedule::inverse_one_plus_t_squared();
    c.constant_C = 30.0;
    c.horizon_T = T;
    c.mode = mode;
    c.alpha_scale = 1.0;
    return c;
}

// lambda = L^2 = 20, S = 1, R = 0.1, gamma_n = 1/n^2, C = 30.
inline PolicyConfig movielens(Mode mode, std::size_t T) {
    PolicyConfig c = synthetic(mode, T);
    c.lambda = 20.0;
    c.bound_L = std::sqrt(20.0);
    c.gamma_schedule = GammaSchedule::inverse_t_squared();
    return c;
}

inline PolicyConfig for_env(EnvKind kind, Mode mode, std::size_t T) {
    return kind == EnvKind::MovieLensReplay ? movielens(mode, T) : synthetic(mode, T);
}

// {0.05, 0.10, ..., 1.00}
inline std::vector<double> full_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 20; ++i) g.push_back(0.05 * i);
    return g;
}

/// Three-point tuning grids around each method's best value, as tabulated
/// for the K=10, d=2 synthetic instance and the K=20 MovieLens replay.
inline std::vector<double> table_grid(EnvKind kind, Mode mode) {
    if (kind == EnvKind::MovieLensReplay) {
        switch (mode) {
            case Mode::LinUCB: return {0.7, 0.75, 0.8};
            case Mode::LinTS: return {0.05, 0.1, 0.15};
            case Mode::LinIMED1: return {0.15, 0.2, 0.25};
            case Mode::LinIMED2: return {0.15, 0.2, 0.25};
            case Mode::LinIMED3: return {0.2, 0.25, 0.3};
            default: return {1.0};
        }
    }
    switch (mode) {
        case Mode::LinUCB: return {0.5, 0.55, 0.6};
        case Mode::LinTS: return {0.2, 0.25, 0.3};
        case Mode::LinIMED1: return {0.15, 0.2, 0.25};
        case Mode::LinIMED2: return {0.2, 0.25, 0.3};
        case Mode::LinIMED3: return {0.15, 0.2, 0.25};
        default: return {1.0};
    }
}

// Best value of each table grid.
inline double tuned_alpha(EnvKind kind, Mode mode) {
    if (kind == EnvKind::MovieLensReplay) {
        switch (mode) {
            case Mode::LinUCB: return 0.75;
            case Mode::LinTS: return 0.1;
            case Mode::LinIMED1: return 0.2;
            case Mode::LinIMED2: return 0.2;
            case Mode::LinIMED3: return 0.25;
            default: return 1.0;
        }
    }
    switch (mode) {
        case Mode::LinUCB: return 0.55;
        case Mode::LinTS: return 0.25;
        case Mode::LinIMED1: return 0.2;
        case Mode::LinIMED2: return 0.25;
        case Mode::LinIMED3: return 0.2;
        default: return 1.0;
    }
}

inline std::size_t default_repeats(EnvKind kind) {
    switch (kind) {
        case EnvKind::Synthetic: return 50;
        case EnvKind::EndOfOptimism: return 10;
        case EnvKind::MovieLensReplay: return 100;
    }
    return 1;
}

inline PolicySpec policy(EnvKind kind, Mode mode, std::size_t T) {
    PolicySpec p;
    p.label = std::string(mode_name(mode));
    p.cfg = for_env(kind, mode, T);
    p.cfg.alpha_scale = tuned_alpha(kind, mode);
    return p;
}

}  // namespace presets

inline std::unique_ptr<Environment> make_environment(const EnvSpec& spec, std::uint64_t seed = 0) {
    switch (spec.kind) {
        case EnvKind::Synthetic: return std::make_unique<SyntheticEnvironment>(spec.K, spec.d, spec.noise_R);
        case EnvKind::EndOfOptimism: return std::make_unique<EndOfOptimismEnvironment>(spec.epsilon, spec.noise_R);
        case EnvKind::MovieLensReplay: {
            if (spec.ratings_path.empty()) throw ConfigError("movielens: a ratings file is required");
            MovieLensOptions opt;
            opt.K = spec.K;
            const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spec.d))));
            if (r * r != spec.d) throw ConfigError("movielens: d must be a perfect square (d = rank^2)");
            opt.rank = r;
            opt.min_ratings = spec.min_ratings;
            opt.seed = seed;
            opt.use_cache = spec.use_cache;
            return std::make_unique<MovieLensEnvironment>(movielens_load(spec.ratings_path, opt));
        }
    }
    throw ConfigError("unknown environment kind");
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    std::string label;
    Mode mode = Mode::LinIMED1;
    double alpha = 1.0;
    std::size_t alpha_index = 0;
    AggregateCurve curve;
    std::vector<double> finals;  // final metric of each repeat
    double final_mean = 0.0;
    double final_std = 0.0;
    std::vector<Trajectory> runs;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::size_t> best;  // per policy, index into rows

    const SweepRow& best_row(const std::string& label) const {
        for (std::size_t b : best)
            if (rows[b].label == label) return rows[b];
        throw UsageError("no policy labelled " + label);
    }

    std::vector<AggregateCurve> best_curves() const {
        std::vector<AggregateCurve> out;
        for (std::size_t b : best) out.push_back(rows[b].curve);
        return out;
    }
};

/// Runs jobs [0, n) on `threads` workers. Results are written by index, so
/// the outcome does not depend on the worker count.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Every (policy, alpha, repeat) triple of the spec against one shared
/// environment. The best alpha per policy has the lowest final mean regret
/// (or highest final CTR); ties keep the earlier grid entry.
inline SweepResult run_experiment(const ExperimentSpec& spec, const Environment& env, bool keep_runs = false) {
    spec.validate();
    struct Job {
        std::size_t row;
        std::size_t repeat;
    };
    SweepResult result;
    std::vector<Job> jobs;
    std::vector<PolicyConfig> configs;
    for (const auto& p : spec.policies) {
        const auto grid = spec.grid_for(p);
        for (std::size_t a = 0; a < grid.size(); ++a) {
            SweepRow row;
            row.label = p.label;
            row.mode = p.cfg.mode;
            row.alpha = grid[a];
            row.alpha_index = a;
            row.runs.resize(spec.repeats);
            PolicyConfig cfg = p.cfg;
            cfg.alpha_scale = grid[a];
            cfg.horizon_T = spec.horizon_T;
            cfg.validate();
            configs.push_back(cfg);
            for (std::size_t r = 0; r < spec.repeats; ++r) jobs.push_back({result.rows.size(), r});
            result.rows.push_back(std::move(row));
        }
    }

    RunOptions opt;
    opt.metric = spec.metric;
    opt.record_contexts = spec.record_contexts;
    parallel_for(jobs.size(), spec.threads, [&](std::size_t i) {
        const Job& job = jobs[i];
        SweepRow& row = result.rows[job.row];
        const std::uint64_t seed = run_seed(spec.base_seed, row.label, row.alpha_index, job.repeat);
        auto policy = make_policy(configs[job.row], env.dim());
        Trajectory traj = run_one(env, *policy, spec.horizon_T, seed, opt);
        traj.label = row.label;
        row.runs[job.repeat] = std::move(traj);
    });

    for (auto& row : result.rows) {
        row.curve = aggregate(row.runs, row.label);
        for (const auto& r : row.runs) row.finals.push_back(r.values.empty() ? 0.0 : r.values.back());
        row.final_mean = row.finals.empty() ? 0.0 : sample_mean(row.finals);
        row.final_std = std::sqrt(sample_variance(row.finals));
        if (!keep_runs) row.runs.clear();
    }

    for (const auto& p : spec.policies) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < result.rows.size(); ++i) {
            if (result.rows[i].label != p.label) continue;
            if (!best) {
                best = i;
                continue;
            }
            const double cand = result.rows[i].final_mean, cur = result.rows[*best].final_mean;
            const bool better = spec.metric == Metric::CumulativeRegret ? cand < cur : cand > cur;
            if (better) best = i;
        }
        result.best.push_back(*best);
    }
    return result;
}

inline SweepResult sweep_alpha(const ExperimentSpec& spec, const Environment& env, bool keep_runs = false) {
    bool has_grid = spec.alpha_grid.has_value();
    for (const auto& p : spec.policies) has_grid = has_grid || !p.alpha_grid.empty();
    if (!has_grid) throw ConfigError("sweep_alpha: alpha grid is empty");
    return run_experiment(spec, env, keep_runs);
}

}  // namespace linimed
