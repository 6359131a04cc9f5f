#include "clfm/builders.hpp"

#include "clfm/linalg.hpp"

#include <cmath>

namespace clfm::builders {

using linalg::image_projector;
using linalg::matrices_equal;
using linalg::pinv;
using linalg::psd_root_of_pinv;
using linalg::rank_of;
using linalg::trivial_intersection;

FactorWeights build_ols(const Characteristics& phi, const Tolerance& tol) {
    require_finite(phi.phi, "phi");
    return FactorWeights{pinv(phi.phi, tol).transpose()};
}

FactorWeights build_gls(const Characteristics& phi, const Matrix& sigma_eps,
                        const Tolerance& tol) {
    require_finite(phi.phi, "phi");
    if (sigma_eps.rows() != phi.n() || sigma_eps.cols() != phi.n()) {
        throw std::invalid_argument("build_gls: sigma_eps shape does not match phi");
    }
    const Matrix s = psd_root_of_pinv(sigma_eps, tol);
    return FactorWeights{(pinv(s * phi.phi, tol) * s).transpose()};
}

GeneralFormResult build_general_form(const Characteristics& phi, const Matrix& r,
                                     const Matrix& s, const Tolerance& tol) {
    const Index n = phi.n();
    const Index m = phi.m();
    if (r.rows() != m || r.cols() != m) {
        throw std::invalid_argument("build_general_form: r must be m x m");
    }
    if (s.rows() != n || s.cols() != n) {
        throw std::invalid_argument("build_general_form: s must be n x n");
    }
    require_finite(phi.phi, "phi");
    require_finite(r, "r");
    require_finite(s, "s");

    GeneralFormResult out;
    const Matrix wt = r * pinv(s * phi.phi * r, tol) * s;
    out.weights = FactorWeights{wt.transpose()};

    const auto idem = matrices_equal(wt * phi.phi * wt, wt, tol);
    out.idempotency_residual = idem.residual;
    out.idempotency_holds = idem.equal;

    const Matrix phi_r = phi.phi * r;
    out.image_condition_holds = trivial_intersection(phi_r, s, tol);
    if (out.image_condition_holds) {
        const auto match = matrices_equal(image_projector(phi.phi * wt, tol),
                                          image_projector(phi_r, tol), tol);
        out.image_match_residual = match.residual;
    }
    return out;
}

Matrix extend_to_invertible(const Matrix& u, const Tolerance& tol) {
    if (u.rows() != u.cols()) {
        throw std::invalid_argument("extend_to_invertible: input must be square");
    }
    require_finite(u, "u");
    const Index n = u.rows();
    // Right singular vectors beyond the rank span ker(U); left ones span
    // ker(U^T). Pairing them in SVD order makes S deterministic.
    const Matrix xi = linalg::kernel_basis(u, tol).basis;
    const Matrix zeta = linalg::kernel_basis(u.transpose(), tol).basis;
    return u + zeta * xi.transpose();
}

GenerativeWeightsResult build_gls_type_generative(const generative::GenerativeSpec& spec,
                                                  const Tolerance& tol) {
    generative::validate_spec(spec, tol);

    GenerativeWeightsResult out;
    out.u = psd_root_of_pinv(spec.sigma_eta, tol);
    out.s = extend_to_invertible(out.u, tol);
    const Matrix wt = pinv(out.s * spec.phi, tol) * out.s;
    out.weights = FactorWeights{wt.transpose()};

    const Matrix projector = spec.phi * wt;  // Phi (S Phi)^+ S
    const auto idem = matrices_equal(projector * projector, projector, tol);
    const auto image = matrices_equal(projector * spec.phi, spec.phi, tol);
    out.projector_idempotency_residual = idem.residual;
    out.projector_image_residual = image.residual;
    out.projector_onto_phi = idem.equal && image.equal;
    return out;
}

FactorWeights build_from_recipe(const Characteristics& phi, const WeightRecipe& recipe,
                                const Tolerance& tol) {
    switch (recipe.kind) {
        case WeightKind::ols:
            return build_ols(phi, tol);
        case WeightKind::gls:
            if (!recipe.sigma_eps) {
                throw std::invalid_argument("gls recipe requires sigma_eps");
            }
            return build_gls(phi, *recipe.sigma_eps, tol);
        case WeightKind::general_form: {
            if (!recipe.r || !recipe.s) {
                throw std::invalid_argument("general_form recipe requires both r and s");
            }
            return build_general_form(phi, *recipe.r, *recipe.s, tol).weights;
        }
        case WeightKind::gls_type_generative: {
            if (!recipe.sigma_eta) {
                throw std::invalid_argument("gls_type_generative recipe requires sigma_eta");
            }
            // Only phi and sigma_eta enter the weight construction; mu_g and
            // sigma_g are irrelevant here and filled with valid placeholders.
            generative::GenerativeSpec spec;
            spec.phi = phi.phi;
            spec.mu_g = Vector::Zero(phi.m());
            spec.sigma_g = Matrix::Identity(phi.m(), phi.m());
            spec.sigma_eta = *recipe.sigma_eta;
            return build_gls_type_generative(spec, tol).weights;
        }
    }
    throw std::invalid_argument("unknown weight recipe kind");
}

}  // namespace clfm::builders
