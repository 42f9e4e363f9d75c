#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "linimed/linimed.hpp"

namespace fs = std::filesystem;
using namespace linimed;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kCheckFailed = 1, kBadUsage = 2, kBadInput = 3, kRunFailed = 4 };

struct RunArgs {
    std::string env = "synthetic";
    std::vector<std::string> policies{"LinUCB", "LinTS", "LinIMED-1", "LinIMED-2", "LinIMED-3"};
    std::size_t T = 1000;
    std::size_t repeats = 0;  // 0: preset for the environment
    std::uint64_t seed = 1;
    std::optional<double> alpha;
    bool sweep = false;
    std::string grid = "table";
    std::size_t K = 0;  // 0: preset
    std::size_t d = 0;
    double eps = 0.01;
    double noise = 0.1;
    std::string ratings;
    std::size_t min_ratings = 1;
    bool no_cache = false;
    std::size_t threads = 1;
    std::string out = "out";
};

EnvKind parse_env(const std::string& s) {
    if (s == "synthetic") return EnvKind::Synthetic;
    if (s == "eoo") return EnvKind::EndOfOptimism;
    if (s == "movielens") return EnvKind::MovieLensReplay;
    throw UsageError("unknown --env '" + s + "'");
}

ExperimentSpec build_spec(const RunArgs& a) {
    ExperimentSpec spec;
    spec.env.kind = parse_env(a.env);
    switch (spec.env.kind) {
        case EnvKind::Synthetic:
            spec.env.K = a.K ? a.K : 10;
            spec.env.d = a.d ? a.d : 2;
            break;
        case EnvKind::EndOfOptimism:
            spec.env.K = 3;
            spec.env.d = 2;
            break;
        case EnvKind::MovieLensReplay:
            spec.env.K = a.K ? a.K : 20;
            spec.env.d = a.d ? a.d : 25;
            spec.metric = Metric::CTR;
            break;
    }
    spec.env.epsilon = a.eps;
    spec.env.noise_R = a.noise;
    spec.env.ratings_path = a.ratings;
    spec.env.min_ratings = a.min_ratings;
    spec.env.use_cache = !a.no_cache;
    spec.horizon_T = a.T;
    spec.repeats = a.repeats ? a.repeats : presets::default_repeats(spec.env.kind);
    spec.base_seed = a.seed;
    spec.threads = a.threads;

    // EoO shares the synthetic confidence parameter, so it also shares its tuned widths.
    const EnvKind tuning = spec.env.kind == EnvKind::MovieLensReplay ? EnvKind::MovieLensReplay : EnvKind::Synthetic;
    for (const auto& name : a.policies) {
        const auto mode = parse_mode(name);
        if (!mode) throw UsageError("unknown policy '" + name + "'");
        PolicySpec p = presets::policy(spec.env.kind, *mode, a.T);
        p.cfg.alpha_scale = presets::tuned_alpha(tuning, *mode);
        if (a.alpha) p.cfg.alpha_scale = *a.alpha;
        if (a.sweep && *mode != Mode::SupLinIMED && *mode != Mode::Uniform)
            p.alpha_grid = a.grid == "full" ? presets::full_grid() : presets::table_grid(tuning, *mode);
        spec.policies.push_back(std::move(p));
    }
    spec.validate();
    return spec;
}

std::string join(const std::vector<std::uint64_t>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

std::string manifest_text(const RunArgs& a, const ExperimentSpec& spec, const SweepResult& res, double seconds) {
    std::ostringstream m;
    m << "# written by linimed " << kVersion << "; usable as --config\n";
    m << "[run]\n";
    m << "env=" << a.env << "\n";
    m << "policy=";
    for (std::size_t i = 0; i < a.policies.size(); ++i) m << (i ? "," : "") << a.policies[i];
    m << "\nT=" << spec.horizon_T << "\nrepeats=" << spec.repeats << "\nseed=" << spec.base_seed << "\n";
    if (a.alpha) m << "alpha=" << format_double(*a.alpha) << "\n";
    m << "sweep=" << (a.sweep ? "true" : "false") << "\ngrid=" << a.grid << "\n";
    m << "K=" << spec.env.K << "\nd=" << spec.env.d << "\neps=" << format_double(spec.env.epsilon) << "\n";
    m << "noise=" << format_double(spec.env.noise_R) << "\n";
    if (!a.ratings.empty()) m << "ratings=" << a.ratings << "\nmin-ratings=" << a.min_ratings << "\n";
    m << "threads=" << spec.threads << "\nout=" << a.out << "\n";
    m << "\n[provenance]\n";
    m << "version=" << kVersion << "\ncompiler=\"" << __VERSION__ << "\"\n";
    m << "eigen=" << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n";
    m << "metric=" << (spec.metric == Metric::CTR ? "ctr" : "regret") << "\n";
    m << "elapsed_seconds=" << format_double(seconds) << "\n";
    m << "\n[policies]\n";
    for (const auto& p : spec.policies) {
        const auto& c = p.cfg;
        m << p.label << "=\"lambda " << format_double(c.lambda) << " S " << format_double(c.bound_S) << " L "
          << format_double(c.bound_L) << " R " << format_double(c.noise_R) << " C " << format_double(c.constant_C)
          << " gamma "
          << (c.gamma_schedule.kind == GammaSchedule::Kind::InverseTSquared ? "1/n^2" : "1/(1+n)^2") << "\"\n";
    }
    m << "\n[results]\n";
    for (const auto& r : res.rows)
        m << r.label << "." << r.alpha_index << "=\"alpha " << format_double(r.alpha) << " final_mean "
          << format_double(r.final_mean) << " final_std " << format_double(r.final_std) << "\"\n";
    m << "\n[seeds]\n";
    for (const auto& r : res.rows) {
        std::vector<std::uint64_t> seeds;
        for (std::size_t k = 0; k < spec.repeats; ++k) seeds.push_back(run_seed(spec.base_seed, r.label, r.alpha_index, k));
        m << r.label << "." << r.alpha_index << "=\"" << join(seeds) << "\"\n";
    }
    return m.str();
}

int cmd_run(const RunArgs& a) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentSpec spec = build_spec(a);
    const auto env = make_environment(spec.env, spec.base_seed);
    const SweepResult res = run_experiment(spec, *env);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path out(a.out);
    fs::create_directories(out);
    const auto curves = res.best_curves();
    emit_csv(curves, out / "curves.csv");
    write_text(out / "sweep.csv", sweep_to_csv(res));
    emit_plot(curves, out / "plot.png", spec.metric == Metric::CTR ? "CTR" : "cumulative regret");
    write_text(out / "manifest", manifest_text(a, spec, res, seconds));

    for (std::size_t b : res.best) {
        const auto& r = res.rows[b];
        std::cout << r.label << "  alpha=" << format_double(r.alpha) << "  final=" << format_double(r.final_mean)
                  << " +- " << format_double(r.final_std) << "\n";
    }
    std::cout << "wrote " << (out / "curves.csv").string() << "\n";
    return kOk;
}

struct VerifyArgs {
    std::string suite;
    std::optional<std::size_t> trials;
    std::uint64_t seed = 1;
    std::string out = ".";
};

int cmd_verify(const VerifyArgs& a) {
    nlohmann::ordered_json report;
    report["suite"] = a.suite;
    report["seed"] = a.seed;
    bool ok = true;
    if (a.suite == "inverse") {
        const auto random = verify::check_inverse(10, 1.0, verify::random_trace(10, a.trials.value_or(500), a.seed));
        const auto collinear =
            verify::check_inverse(5, 1e-4, verify::collinear_trace(5, a.trials.value_or(500), a.seed));
        report["random.steps"] = random.steps;
        report["random.max_deviation"] = random.max_deviation();
        report["random.tolerance"] = 1e-8;
        report["collinear.steps"] = collinear.steps;
        report["collinear.max_deviation"] = collinear.max_deviation();
        report["collinear.tolerance"] = 1e-5;
        ok = random.max_deviation() < 1e-8 && collinear.max_deviation() < 1e-5;
    } else if (a.suite == "coverage") {
        verify::CoverageSetup s;
        s.trials = a.trials.value_or(1000);
        s.seed = a.seed;
        const auto rep = verify::check_coverage(s);
        report["d"] = s.dim;
        report["T"] = s.horizon_T;
        report["gamma"] = rep.gamma_nominal;
        report["trials"] = rep.trials;
        report["violations"] = rep.violations;
        report["rate"] = rep.rate;
        report["mc_stderr"] = rep.mc_stderr;
        report["threshold"] = rep.gamma_nominal + 3.0 * rep.mc_stderr;
        report["max_ratio"] = rep.max_ratio;
        ok = rep.passed();
    } else if (a.suite == "potential") {
        // EoO trajectories of every tuned method, as in the end-of-optimism experiment.
        EndOfOptimismEnvironment env(0.01);
        const std::size_t T = a.trials.value_or(10000);
        report["T"] = T;
        for (Mode m : {Mode::LinUCB, Mode::LinTS, Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3}) {
            auto cfg = presets::synthetic(m, T);
            cfg.alpha_scale = presets::tuned_alpha(EnvKind::Synthetic, m);
            RidgePolicy policy(cfg, 2);
            RunOptions opt;
            opt.record_contexts = true;
            const auto traj = run_one(env, policy, T, run_seed(a.seed, mode_name(m), 0, 0), opt);
            for (const auto& r : verify::check_potential(traj.chosen, cfg.lambda, env.bound_L())) {
                const std::string key = std::string(mode_name(m)) + ".m=" + format_double(r.m);
                report[key + ".count"] = r.observed_count;
                report[key + ".bound"] = r.bound;
                ok = ok && r.holds();
            }
        }
    } else if (a.suite == "index") {
        const std::size_t n = a.trials.value_or(1000);
        for (Mode m : {Mode::LinIMED1, Mode::LinIMED2, Mode::LinIMED3}) {
            const auto rep = verify::check_index_oracle_random(m, n, a.seed);
            const std::string key(mode_name(m));
            report[key + ".tuples"] = rep.tuples;
            report[key + ".disagreements"] = rep.disagreements;
            report[key + ".max_abs_diff"] = rep.max_abs_diff;
            ok = ok && rep.disagreements == 0;
        }
    } else {
        throw UsageError("unknown suite '" + a.suite + "'");
    }
    report["passed"] = ok;
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "verify.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n" << (ok ? "PASS" : "FAIL") << " " << a.suite << "\n";
    return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear contextual bandit experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "run an experiment and write curves, sweep table, plot and manifest");
    // Config files are read by the root app; `run --config f` falls through to it.
    app.set_config("--config", "", "key=value file; keys of the [run] section mirror the run flags, "
                                   "flags given on the command line win");
    app.allow_config_extras(CLI::config_extras_mode::ignore);
    run_cmd->fallthrough();
    run_cmd->add_option("--env", run.env, "synthetic | eoo | movielens")
        ->check(CLI::IsMember({"synthetic", "eoo", "movielens"}))
        ->capture_default_str();
    run_cmd->add_option("--policy", run.policies, "comma-separated policy names")->delimiter(',')->capture_default_str();
    run_cmd->add_option("--T", run.T, "horizon")->check(CLI::NonNegativeNumber)->capture_default_str();
    run_cmd->add_option("--repeats", run.repeats, "independent runs per (policy, alpha); default per environment");
    run_cmd->add_option("--seed", run.seed, "base seed")->capture_default_str();
    auto* alpha_opt = run_cmd->add_option("--alpha", run.alpha, "confidence width scale for every policy");
    auto* sweep_opt = run_cmd->add_flag("--sweep", run.sweep, "sweep alpha over a grid and keep the best");
    alpha_opt->excludes(sweep_opt);
    run_cmd->add_option("--grid", run.grid, "sweep grid: table (3 points) or full (0.05..1.0)")
        ->check(CLI::IsMember({"table", "full"}))
        ->capture_default_str();
    run_cmd->add_option("--K", run.K, "number of arms (synthetic, movielens)");
    run_cmd->add_option("--d", run.d, "dimension (synthetic; movielens uses rank^2)");
    run_cmd->add_option("--eps", run.eps, "end-of-optimism epsilon")->capture_default_str();
    run_cmd->add_option("--noise", run.noise, "reward noise R")->capture_default_str();
    run_cmd->add_option("--ratings", run.ratings, "ratings file (ratings.dat or ratings.csv)");
    run_cmd->add_option("--min-ratings", run.min_ratings, "minimum ratings per user among the K movies");
    run_cmd->add_flag("--no-cache", run.no_cache, "do not read or write the factor cache");
    run_cmd->add_option("--threads", run.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();

    VerifyArgs ver;
    auto* verify_cmd = app.add_subcommand("verify", "run one verification suite; exit 1 on failure");
    verify_cmd->add_option("--suite", ver.suite, "inverse | coverage | potential | index")
        ->required()
        ->check(CLI::IsMember({"inverse", "coverage", "potential", "index"}));
    verify_cmd->add_option("--trials", ver.trials, "trials, updates, tuples or rounds, depending on the suite");
    verify_cmd->add_option("--seed", ver.seed, "seed")->capture_default_str();
    verify_cmd->add_option("--out", ver.out, "directory for verify.json")->capture_default_str();

    std::string plot_csv, plot_out = "plot.png", plot_label;
    auto* plot_cmd = app.add_subcommand("plot", "render a curves.csv to PNG");
    plot_cmd->add_option("--csv", plot_csv, "curves file")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--out", plot_out, "output PNG")->capture_default_str();
    plot_cmd->add_option("--ylabel", plot_label, "y axis label");

    std::size_t gen_users = 2000, gen_movies = 200;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    auto* gen_cmd = app.add_subcommand("gen-ratings", "write a synthetic ratings.dat-format file");
    gen_cmd->add_option("--users", gen_users)->capture_default_str();
    gen_cmd->add_option("--movies", gen_movies)->capture_default_str();
    gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
    gen_cmd->add_option("--out", gen_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run);
        if (*verify_cmd) return cmd_verify(ver);
        if (*plot_cmd) {
            emit_plot(read_curves_csv(plot_csv), plot_out, plot_label);
            std::cout << "wrote " << plot_out << "\n";
            return kOk;
        }
        if (*gen_cmd) {
            std::ofstream out(gen_out, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open " + gen_out);
            generate_synthetic_ratings(out, gen_users, gen_movies, gen_seed);
            return kOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadUsage;
    } catch (const IngestionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRunFailed;
    }
    return kBadUsage;
}
