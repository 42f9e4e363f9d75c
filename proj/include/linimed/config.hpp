#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "linimed/errors.hpp"

namespace linimed {

enum class Mode { LinIMED1, LinIMED2, LinIMED3, LinUCB, LinTS, SupLinIMED, Uniform };

inline std::string_view mode_name(Mode m) {
    switch (m) {
        case Mode::LinIMED1: return "LinIMED-1";
        case Mode::LinIMED2: return "LinIMED-2";
        case Mode::LinIMED3: return "LinIMED-3";
        case Mode::LinUCB: return "LinUCB";
        case Mode::LinTS: return "LinTS";
        case Mode::SupLinIMED: return "SupLinIMED";
        case Mode::Uniform: return "Uniform";
    }
    return "?";
}

// Accepts the display names above, case-insensitive, with or without the dash.
inline std::optional<Mode> parse_mode(std::string_view s) {
    std::string key;
    for (char c : s)
        if (c != '-' && c != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (key == "linimed1") return Mode::LinIMED1;
    if (key == "linimed2") return Mode::LinIMED2;
    if (key == "linimed3") return Mode::LinIMED3;
    if (key == "linucb") return Mode::LinUCB;
    if (key == "lints") return Mode::LinTS;
    if (key == "suplinimed") return Mode::SupLinIMED;
    if (key == "uniform" || key == "random") return Mode::Uniform;
    return std::nullopt;
}

inline bool is_linimed(Mode m) {
    return m == Mode::LinIMED1 || m == Mode::LinIMED2 || m == Mode::LinIMED3;
}

/// Concentration parameter schedule. `gamma(n)` is the value paired with the
/// confidence width of subscript n, so beta_n uses gamma(n).
struct GammaSchedule {
    enum class Kind { InverseTSquared, InverseOnePlusTSquared, Constant };
    Kind kind = Kind::InverseTSquared;
    double value = 0.0;  // only for Constant

    static GammaSchedule inverse_t_squared() { return {Kind::InverseTSquared, 0.0}; }
    static GammaSchedule inverse_one_plus_t_squared() { return {Kind::InverseOnePlusTSquared, 0.0}; }
    static GammaSchedule constant(double g) { return {Kind::Constant, g}; }

    double operator()(std::size_t n) const {
        const double t = static_cast<double>(n);
        switch (kind) {
            case Kind::InverseTSquared: {
                // 1/0^2 is undefined; the first round uses gamma = 1.
                const double tt = std::max(t, 1.0);
                return 1.0 / (tt * tt);
            }
            case Kind::InverseOnePlusTSquared: return 1.0 / ((1.0 + t) * (1.0 + t));
            case Kind::Constant: return value;
        }
        return value;
    }
};

struct PolicyConfig {
    double lambda = 1.0;
    double bound_S = 1.0;
    double bound_L = 1.0;
    double noise_R = 0.1;
    GammaSchedule gamma_schedule = GammaSchedule::inverse_t_squared();
    double alpha_scale = 1.0;
    double constant_C = 30.0;
    std::size_t horizon_T = 1000;
    Mode mode = Mode::LinIMED1;

    void validate() const {
        auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(lambda)) throw ConfigError("lambda must be positive");
        if (!positive(bound_S)) throw ConfigError("bound S must be positive");
        if (!positive(bound_L)) throw ConfigError("bound L must be positive");
        if (!(noise_R >= 0.0) || !std::isfinite(noise_R)) throw ConfigError("noise R must be >= 0");
        // Zero is allowed: it collapses every width (greedy limit).
        if (!(alpha_scale >= 0.0) || !std::isfinite(alpha_scale))
            throw ConfigError("alpha scale must be >= 0");
        if (!(constant_C >= 1.0)) throw ConfigError("constant C must be >= 1");
        if (horizon_T == 0) throw ConfigError("horizon T must be positive");
        if (gamma_schedule.kind == GammaSchedule::Kind::Constant && !(gamma_schedule.value > 0.0))
            throw ConfigError("gamma must be positive");
    }
};

/// Squared confidence radius
///   beta_n = (R sqrt(d log((1 + n L^2/lambda) / gamma(n))) + sqrt(lambda) S)^2
/// used at round t = n + 1.
inline double beta(std::size_t t_minus_1, std::size_t dim, const PolicyConfig& cfg) {
    const double gamma = cfg.gamma_schedule(t_minus_1);
    if (!(gamma > 0.0)) throw ConfigError("beta: gamma must be positive");
    const double n = static_cast<double>(t_minus_1);
    const double arg = (1.0 + n * cfg.bound_L * cfg.bound_L / cfg.lambda) / gamma;
    // For gamma > 1 the log can dip below zero; the radius term is then dropped.
    const double log_term = std::max(0.0, std::log(arg));
    const double r = cfg.noise_R * std::sqrt(static_cast<double>(dim) * log_term) +
                     std::sqrt(cfg.lambda) * cfg.bound_S;
    return r * r;
}

}  // namespace linimed
