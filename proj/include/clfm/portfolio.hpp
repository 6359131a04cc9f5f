#pragma once

#include "clfm/model.hpp"

namespace clfm::portfolio {

/// Mean-variance efficient portfolio on a possibly singular covariance:
/// weights = Sigma^+ mu, attaining sr_squared = mu^T Sigma^+ mu.
struct MVEResult {
    Vector weights;
    double sr_squared = 0.0;
};

/// Minimum-variance SDF M = intercept + loadings^T x with unit mean, where
/// intercept = 1 + mu^T Sigma^+ mu and loadings = -Sigma^+ mu.
struct SDFCoefficients {
    double intercept = 1.0;
    Vector loadings;
};

/// Weak no-arbitrage check mu ∈ Im(Sigma). When it fails, the kernel
/// projection of mu is a risk-free strictly positive payoff direction; it is
/// reported as the arbitrage component (zero vector when the check holds).
struct NoArbitrageCheck {
    bool holds = false;
    double residual = 0.0;  // ||P mu - mu|| / max(1, ||mu||)
    Vector arbitrage_component;
};

/// Raised by mve/sdf when the weak no-arbitrage condition fails.
class arbitrage_error : public std::runtime_error {
  public:
    arbitrage_error(const std::string& what, Vector component)
        : std::runtime_error(what), component_(std::move(component)) {}

    const Vector& arbitrage_component() const { return component_; }

  private:
    Vector component_;
};

NoArbitrageCheck check_no_arbitrage(const CrossSectionMoments& moments,
                                    const Tolerance& tol);

/// MVE computation without the arbitrage gate; used where violations must be
/// reported rather than thrown.
MVEResult mve_unchecked(const Vector& mu, const Matrix& sigma, const Tolerance& tol);

/// Throws arbitrage_error (carrying the kernel component of mu) when the weak
/// no-arbitrage condition fails.
MVEResult mve(const CrossSectionMoments& moments, const Tolerance& tol);

/// Factor-space MVE on (mu_f, sigma_f) through the pseudoinverse.
MVEResult factor_mve(const FactorModelMoments& fm, const Tolerance& tol);

SDFCoefficients sdf_unchecked(const Vector& mu, const Matrix& sigma, const Tolerance& tol);

/// Minimum-variance SDF pricing all assets; throws arbitrage_error when the
/// weak no-arbitrage condition fails.
SDFCoefficients sdf(const CrossSectionMoments& moments, const Tolerance& tol);

/// Minimum-variance SDF pricing all factors, in factor coordinates
/// M = intercept + loadings^T f; throws arbitrage_error when mu_f is outside
/// Im(sigma_f).
SDFCoefficients sdf(const FactorModelMoments& fm, const Tolerance& tol);

}  // namespace clfm::portfolio
