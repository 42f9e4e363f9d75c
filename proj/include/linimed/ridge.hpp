#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "linimed/errors.hpp"

namespace linimed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Number of rank-1 inverse updates between two full refreshes of gram_inv.
inline constexpr std::size_t kRefreshInterval = 256;

/// Regularized least-squares state: V = lambda*I + sum x x^T, W = sum y x,
/// estimate = V^{-1} W. The inverse is carried along with Sherman-Morrison
/// updates and recomputed from a Cholesky factorization of V every
/// kRefreshInterval updates so the drift of V * V^{-1} from I stays bounded.
class RidgeState {
public:
    RidgeState(std::size_t dim, double lambda) {
        if (dim == 0) throw ConfigError("ridge: dimension must be >= 1");
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ConfigError("ridge: lambda must be positive and finite");
        lambda_ = lambda;
        gram_ = lambda * Matrix::Identity(dim, dim);
        gram_inv_ = (1.0 / lambda) * Matrix::Identity(dim, dim);
        moment_ = Vector::Zero(dim);
        estimate_ = Vector::Zero(dim);
    }

    std::size_t dim() const { return static_cast<std::size_t>(gram_.rows()); }
    double lambda() const { return lambda_; }
    const Matrix& gram() const { return gram_; }
    const Matrix& gram_inv() const { return gram_inv_; }
    const Vector& moment() const { return moment_; }
    const Vector& estimate() const { return estimate_; }
    // Rank-1 updates since the last full refresh.
    std::size_t updates() const { return updates_; }
    std::size_t observations() const { return observations_; }

    void update(const Vector& x, double y) {
        check_dim(x, "ridge_update");
        if (!x.allFinite() || !std::isfinite(y))
            throw NumericError("ridge_update: non-finite context or reward");
        ++observations_;
        ++updates_;
        if (x.isZero(0.0)) {
            maybe_refresh();
            return;
        }
        gram_.noalias() += x * x.transpose();
        moment_.noalias() += y * x;

        const Vector u = gram_inv_ * x;
        const double denom = 1.0 + x.dot(u);
        gram_inv_.noalias() -= (u * u.transpose()) / denom;
        // Keep the stored inverse exactly symmetric.
        gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();

        if (!maybe_refresh()) estimate_.noalias() = gram_inv_ * moment_;
    }

    // Recompute gram_inv from scratch; also resets the update counter.
    void refresh() {
        const Eigen::LLT<Matrix> llt(gram_);
        if (llt.info() != Eigen::Success)
            throw NumericError("ridge: gram matrix lost positive definiteness");
        gram_inv_ = llt.solve(Matrix::Identity(dim(), dim()));
        gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();
        estimate_ = llt.solve(moment_);
        updates_ = 0;
    }

    // ||x||^2 in the V^{-1} norm.
    double mahalanobis_sq(const Vector& x) const {
        check_dim(x, "mahalanobis_sq");
        const double q = x.dot(gram_inv_ * x);
        return q > 0.0 ? q : 0.0;
    }

    double predict(const Vector& x) const {
        check_dim(x, "predict");
        return estimate_.dot(x);
    }

private:
    bool maybe_refresh() {
        if (updates_ < kRefreshInterval) return false;
        refresh();
        return true;
    }

    void check_dim(const Vector& x, const char* op) const {
        if (static_cast<std::size_t>(x.size()) != dim())
            throw UsageError(std::string(op) + ": expected dimension " + std::to_string(dim()) +
                             ", got " + std::to_string(x.size()));
    }

    double lambda_ = 1.0;
    Matrix gram_;
    Matrix gram_inv_;
    Vector moment_;
    Vector estimate_;
    std::size_t updates_ = 0;
    std::size_t observations_ = 0;
};

inline RidgeState ridge_init(std::size_t dim, double lambda) { return RidgeState(dim, lambda); }

inline RidgeState ridge_update(RidgeState state, const Vector& x, double y) {
    state.update(x, y);
    return state;
}

inline double mahalanobis_sq(const RidgeState& state, const Vector& x) {
    return state.mahalanobis_sq(x);
}

inline double predict(const RidgeState& state, const Vector& x) { return state.predict(x); }

}  // namespace linimed
