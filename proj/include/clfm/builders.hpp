#pragma once

#include "clfm/generative.hpp"
#include "clfm/model.hpp"

#include <optional>

namespace clfm::builders {

enum class WeightKind { ols, gls, general_form, gls_type_generative };

/// Declarative recipe for a weight matrix. general_form requires both r and s;
/// gls carries the residual covariance its whitening root is derived from;
/// gls_type_generative carries the idiosyncratic covariance of the process.
struct WeightRecipe {
    WeightKind kind = WeightKind::ols;
    std::optional<Matrix> r;          // m x m, general_form
    std::optional<Matrix> s;          // n x n, general_form
    std::optional<Matrix> sigma_eps;  // n x n, gls
    std::optional<Matrix> sigma_eta;  // n x n, gls_type_generative
};

/// OLS factor weights W^T = Phi^+. Phi W^T is then the orthogonal projector
/// onto Im(Phi). Tolerates rank-deficient Phi.
FactorWeights build_ols(const Characteristics& phi, const Tolerance& tol);

/// GLS factor weights W^T = (S Phi)^+ S with the symmetric root
/// S^T S = sigma_eps^+. Throws on non-PSD sigma_eps.
FactorWeights build_gls(const Characteristics& phi, const Matrix& sigma_eps,
                        const Tolerance& tol);

struct GeneralFormResult {
    FactorWeights weights;
    /// Relative residual of W^T Phi W^T = W^T; holds for every output.
    double idempotency_residual = 0.0;
    bool idempotency_holds = false;
    /// Whether Im(Phi R) ∩ ker(S) = {0}.
    bool image_condition_holds = false;
    /// Projector distance between Im(Phi W^T) and Im(Phi R), reported when the
    /// image condition holds (in which case the two images coincide).
    std::optional<double> image_match_residual;
};

/// W^T = R (S Phi R)^+ S for arbitrary m x m R and n x n S, with the two
/// structural properties verified post-hoc and reported.
GeneralFormResult build_general_form(const Characteristics& phi, const Matrix& r,
                                     const Matrix& s, const Tolerance& tol);

/// Extends a square matrix U to an invertible S that agrees with U on
/// Im(U^T), whose adjoint agrees with U^T on Im(U), and which maps ker(U)
/// bijectively onto ker(U^T). Returns U itself when U is invertible, and an
/// orthogonal matrix when U = 0. Kernel bases are taken from the SVD in its
/// deterministic order, so the result is reproducible without a seed.
Matrix extend_to_invertible(const Matrix& u, const Tolerance& tol);

struct GenerativeWeightsResult {
    FactorWeights weights;
    Matrix u;  // symmetric root with U^T U = sigma_eta^+
    Matrix s;  // invertible extension of U
    /// Residuals of the projection property of Pi = Phi (S Phi)^+ S:
    /// idempotency and Pi Phi = Phi (so that Im(Pi) = Im(Phi)).
    double projector_idempotency_residual = 0.0;
    double projector_image_residual = 0.0;
    bool projector_onto_phi = false;
};

/// Weights of the spanning tradable factors for a generative spec:
/// U from sigma_eta, S its invertible extension, W^T = (S Phi)^+ S.
GenerativeWeightsResult build_gls_type_generative(const generative::GenerativeSpec& spec,
                                                  const Tolerance& tol);

/// Resolves a recipe against characteristics. Used by the file formats.
FactorWeights build_from_recipe(const Characteristics& phi, const WeightRecipe& recipe,
                                const Tolerance& tol);

}  // namespace clfm::builders
