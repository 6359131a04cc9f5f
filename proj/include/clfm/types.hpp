#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace clfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerical policy shared by every rank decision and residual test in the
/// library. A single Tolerance instance is threaded through all operations so
/// that condition checks on different matrices stay comparable.
struct Tolerance {
    /// Singular values below rel_rank_tol * sigma_max are treated as zero.
    double rel_rank_tol = 1e-10;
    /// Threshold for matrix-equality and subspace-membership residuals.
    double abs_residual_tol = 1e-8;

    Tolerance() = default;

    Tolerance(double rank_tol, double residual_tol)
        : rel_rank_tol(rank_tol), abs_residual_tol(residual_tol) {
        if (!(rank_tol > 0.0) || !(rank_tol < 1.0)) {
            throw std::invalid_argument("rel_rank_tol must be in (0, 1)");
        }
        if (!(residual_tol > 0.0)) {
            throw std::invalid_argument("abs_residual_tol must be positive");
        }
    }
};

/// Throws std::invalid_argument if any entry of `a` is NaN or infinite.
void require_finite(const Matrix& a, const std::string& name);
void require_finite(const Vector& v, const std::string& name);

}  // namespace clfm
