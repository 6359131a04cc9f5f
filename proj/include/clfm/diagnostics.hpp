#pragma once

#include "clfm/model.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clfm::diagnostics {

/// Every moment-level condition of the tradable factor model, each evaluated
/// as a named predicate with a relative residual.
enum class ConditionId {
    FSPANNED_EPS_UNCORR,    // cov(Phi f, eps) = 0
    SIGMA_DECOMP,           // Sigma = Phi Sigma_f Phi^T + Sigma_eps
    PHI_FULL_RANK,          // rank(Phi) = m
    F_EPS_UNCORR,           // cov(f, eps) = 0
    TRADABLE_TRIPLE_EQ,     // Sigma W Phi^T = Phi W^T Sigma W Phi^T = Phi W^T Sigma
    TRIVIAL_INTERSECT,      // Im(W^T) ∩ ker(Phi) = {0}
    EPS_ORTHO,              // Phi W^T Sigma_eps = 0
    SIGEPS_RANK_DEFICIENT,  // rank(Sigma_eps) < n
    PROJ,                   // Phi W^T idempotent
    PROJ_SELF_ADJOINT,      // Phi W^T = W Phi^T
    CS_ORTHO,               // (Phi f)^T eps = 0; moment level via PROJ + PROJ_SELF_ADJOINT
    W_IDEMPOTENT_ON_PHI,    // W^T Phi W^T = W^T
    RESID_UNPRICED,         // E[eps] = 0
    MU_REPRODUCED,          // mu = Phi W^T mu
    CHARS_ARE_COVS,         // Phi (Sigma_f + mu_f mu_f^T) = Sigma W + mu mu_f^T
    NA,                     // mu ∈ Im(Sigma)
    SR_EQUALITY,            // SR_f^2 = SR^2
    SPANNING,               // mu ∈ Im(Sigma W)
    MVE_SPANNED,            // W Sigma_f^+ mu_f = Sigma^+ mu on Im(Sigma)
    SDF_SPANNED,            // factor SDF coincides with the asset SDF
    LEMCEX_VECTOR_EQ,       // Sigma W Phi^T b = Phi W^T Sigma W Phi^T b for the witness b
};

inline constexpr std::array<ConditionId, 21> all_conditions = {
    ConditionId::FSPANNED_EPS_UNCORR, ConditionId::SIGMA_DECOMP,
    ConditionId::PHI_FULL_RANK,       ConditionId::F_EPS_UNCORR,
    ConditionId::TRADABLE_TRIPLE_EQ,  ConditionId::TRIVIAL_INTERSECT,
    ConditionId::EPS_ORTHO,           ConditionId::SIGEPS_RANK_DEFICIENT,
    ConditionId::PROJ,                ConditionId::PROJ_SELF_ADJOINT,
    ConditionId::CS_ORTHO,            ConditionId::W_IDEMPOTENT_ON_PHI,
    ConditionId::RESID_UNPRICED,      ConditionId::MU_REPRODUCED,
    ConditionId::CHARS_ARE_COVS,      ConditionId::NA,
    ConditionId::SR_EQUALITY,         ConditionId::SPANNING,
    ConditionId::MVE_SPANNED,         ConditionId::SDF_SPANNED,
    ConditionId::LEMCEX_VECTOR_EQ,
};

std::string_view to_string(ConditionId id);
std::optional<ConditionId> condition_from_string(std::string_view name);

struct ConditionReport {
    ConditionId id{};
    bool holds = false;
    /// Relative residual, scaled by max(1, operand norms); holds implies
    /// residual <= abs_residual_tol except for pure rank predicates, whose
    /// residual is the rank defect / spectral gap.
    double residual = 0.0;
    /// Certificate where one exists (spanning coefficients c, the vector b of
    /// the vector-equality condition, ...).
    std::optional<Vector> witness;
    std::string detail;
};

enum class EdgeStatus { vacuous, confirmed, violated };

std::string_view to_string(EdgeStatus status);

struct ImplicationEdge {
    std::string name;
    EdgeStatus status = EdgeStatus::vacuous;
};

/// Status of every implication between the conditions above. An edge is
/// violated only if its premise holds and its conclusion fails; that signals
/// an implementation bug, never a property of the data.
struct ImplicationGraphReport {
    std::vector<ImplicationEdge> edges;

    bool any_violated() const;
};

/// Evaluates a single condition from population moments.
ConditionReport check(ConditionId id, const CrossSectionMoments& moments,
                      const Characteristics& phi, const FactorWeights& w,
                      const Tolerance& tol);

/// Evaluates every condition, in the deterministic order of all_conditions.
std::vector<ConditionReport> run_all(const CrossSectionMoments& moments,
                                     const Characteristics& phi,
                                     const FactorWeights& w, const Tolerance& tol);

/// True iff Phi W^T differs from zero beyond tolerance (the non-degeneracy
/// premise of the rank-deficiency implication).
bool factor_model_nondegenerate(const Characteristics& phi, const FactorWeights& w,
                                const Tolerance& tol);

ImplicationGraphReport verify_implication_graph(const std::vector<ConditionReport>& reports,
                                                bool phi_w_nonzero,
                                                const Tolerance& tol);

/// Sample-path form of the cross-sectional orthogonality condition: evaluates
/// the scalar (Phi f)^T eps on one realized return vector.
ConditionReport check_cs_ortho_on_sample(const ReturnSample& x,
                                         const Characteristics& phi,
                                         const FactorWeights& w, const Tolerance& tol);

}  // namespace clfm::diagnostics
