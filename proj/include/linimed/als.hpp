#pragma once

#include <cstddef>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "linimed/errors.hpp"
#include "linimed/ridge.hpp"

namespace linimed {

struct FactorModel {
    Matrix users;   // n_users x rank
    Matrix items;   // n_items x rank
};

/// Alternating least squares for a dense target matrix Y (rows = users,
/// columns = items): minimizes ||Y - U M^T||_F^2 + reg (||U||_F^2 + ||M||_F^2).
/// Item factors start at N(0, 0.1^2).
inline FactorModel als_factorize(const Matrix& target, std::size_t rank, double reg, std::size_t iterations,
                                 std::mt19937_64& rng) {
    if (rank == 0) throw ConfigError("als: rank must be >= 1");
    if (!(reg > 0.0)) throw ConfigError("als: regularization must be positive");
    const auto r = static_cast<Eigen::Index>(rank);
    FactorModel model;
    model.users = Matrix::Zero(target.rows(), r);
    model.items = Matrix(target.cols(), r);
    std::normal_distribution<double> init(0.0, 0.1);
    for (Eigen::Index i = 0; i < model.items.rows(); ++i)
        for (Eigen::Index k = 0; k < r; ++k) model.items(i, k) = init(rng);

    const Matrix eye = reg * Matrix::Identity(r, r);
    for (std::size_t it = 0; it < iterations; ++it) {
        // Every row shares the same normal matrix since all entries are observed.
        Eigen::LLT<Matrix> item_normal(model.items.transpose() * model.items + eye);
        model.users = item_normal.solve(model.items.transpose() * target.transpose()).transpose();
        Eigen::LLT<Matrix> user_normal(model.users.transpose() * model.users + eye);
        model.items = user_normal.solve(model.users.transpose() * target).transpose();
    }
    return model;
}

inline double als_loss(const Matrix& target, const FactorModel& model, double reg) {
    return (target - model.users * model.items.transpose()).squaredNorm() +
           reg * (model.users.squaredNorm() + model.items.squaredNorm());
}

}  // namespace linimed
