#include "clfm/portfolio.hpp"

#include "clfm/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace clfm::portfolio {

namespace {

NoArbitrageCheck membership_check(const Vector& mu, const Matrix& sigma,
                                  const Tolerance& tol) {
    const auto member = linalg::in_image(mu, sigma, tol);
    NoArbitrageCheck check;
    check.holds = member.in_image;
    check.residual = member.residual / std::max(1.0, mu.norm());
    const Matrix p = linalg::image_projector(sigma, tol);
    check.arbitrage_component = mu - p * mu;
    return check;
}

}  // namespace

NoArbitrageCheck check_no_arbitrage(const CrossSectionMoments& moments,
                                    const Tolerance& tol) {
    require_finite(moments.mu, "mu");
    require_finite(moments.sigma, "sigma");
    return membership_check(moments.mu, moments.sigma, tol);
}

MVEResult mve_unchecked(const Vector& mu, const Matrix& sigma, const Tolerance& tol) {
    if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
        throw std::invalid_argument("mve: sigma shape does not match mu");
    }
    MVEResult out;
    out.weights = linalg::pinv(sigma, tol) * mu;
    // mu^T Sigma^+ mu is a PSD quadratic form; clamp rounding noise at zero.
    out.sr_squared = std::max(0.0, mu.dot(out.weights));
    return out;
}

MVEResult mve(const CrossSectionMoments& moments, const Tolerance& tol) {
    const NoArbitrageCheck check = check_no_arbitrage(moments, tol);
    if (!check.holds) {
        throw arbitrage_error("mve: mu is not in the image of sigma",
                              check.arbitrage_component);
    }
    return mve_unchecked(moments.mu, moments.sigma, tol);
}

MVEResult factor_mve(const FactorModelMoments& fm, const Tolerance& tol) {
    return mve_unchecked(fm.mu_f, fm.sigma_f, tol);
}

SDFCoefficients sdf_unchecked(const Vector& mu, const Matrix& sigma, const Tolerance& tol) {
    const MVEResult efficient = mve_unchecked(mu, sigma, tol);
    SDFCoefficients out;
    out.intercept = 1.0 + efficient.sr_squared;
    out.loadings = -efficient.weights;
    return out;
}

SDFCoefficients sdf(const CrossSectionMoments& moments, const Tolerance& tol) {
    const NoArbitrageCheck check = check_no_arbitrage(moments, tol);
    if (!check.holds) {
        throw arbitrage_error("sdf: mu is not in the image of sigma",
                              check.arbitrage_component);
    }
    return sdf_unchecked(moments.mu, moments.sigma, tol);
}

SDFCoefficients sdf(const FactorModelMoments& fm, const Tolerance& tol) {
    const NoArbitrageCheck check = membership_check(fm.mu_f, fm.sigma_f, tol);
    if (!check.holds) {
        throw arbitrage_error("sdf: mu_f is not in the image of sigma_f",
                              check.arbitrage_component);
    }
    return sdf_unchecked(fm.mu_f, fm.sigma_f, tol);
}

}  // namespace clfm::portfolio
