// Runs LinUCB and LinIMED-3 on the End of Optimism instance and prints the
// final mean regret of each.
#include <iostream>

#include "linimed/linimed.hpp"

int main() {
    using namespace linimed;
    EndOfOptimismEnvironment env(0.01);

    ExperimentSpec spec;
    spec.env.kind = EnvKind::EndOfOptimism;
    spec.horizon_T = 20000;
    spec.repeats = 5;
    spec.base_seed = 42;
    for (Mode m : {Mode::LinUCB, Mode::LinIMED3}) {
        PolicySpec p = presets::policy(EnvKind::EndOfOptimism, m, spec.horizon_T);
        p.cfg.alpha_scale = presets::tuned_alpha(EnvKind::Synthetic, m);
        spec.policies.push_back(p);
    }

    const SweepResult res = run_experiment(spec, env);
    for (const auto& row : res.rows)
        std::cout << row.label << ": regret " << row.final_mean << " +- " << row.final_std << "\n";

    // One policy driven by hand.
    RidgePolicy policy(presets::synthetic(Mode::LinIMED1, 100), env.dim());
    Rng rng(7);
    double regret = 0.0;
    for (std::size_t t = 1; t <= 100; ++t) {
        const Round round = env.next_round(t, rng);
        const Selection sel = policy.select(round.arms, rng);
        policy.observe(round.arms.arms[sel.position].x, env.draw_reward(round, sel.position, rng));
        regret += round.regret(sel.position);
    }
    std::cout << "hand-driven LinIMED-1, 100 rounds: regret " << regret << "\n";
}
