#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "linimed/errors.hpp"

namespace linimed {

inline double sample_mean(std::span<const double> xs) {
    if (xs.empty()) throw UsageError("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// n - 1 denominator; zero for a single observation.
inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

struct WelchResult {
    double t = 0.0;
    double dof = 0.0;
    double p_value = 1.0;  // one-sided, H1: mean(a) < mean(b)
};

/// Welch's unequal-variance t-test, one-sided in the direction mean(a) < mean(b).
inline WelchResult welch_less(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw UsageError("welch test needs at least two samples per group");
    const double va = sample_variance(a) / static_cast<double>(a.size());
    const double vb = sample_variance(b) / static_cast<double>(b.size());
    WelchResult r;
    const double diff = sample_mean(a) - sample_mean(b);
    const double se = std::sqrt(va + vb);
    if (se == 0.0) {
        r.p_value = diff < 0.0 ? 0.0 : 1.0;
        r.t = diff < 0.0 ? -INFINITY : (diff > 0.0 ? INFINITY : 0.0);
        return r;
    }
    r.t = diff / se;
    r.dof = (va + vb) * (va + vb) /
            (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    const boost::math::students_t dist(r.dof);
    r.p_value = boost::math::cdf(dist, r.t);
    return r;
}

}  // namespace linimed
