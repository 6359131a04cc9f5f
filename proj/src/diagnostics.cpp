#include "clfm/diagnostics.hpp"

#include "clfm/linalg.hpp"
#include "clfm/portfolio.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace clfm::diagnostics {

namespace {

constexpr std::array<std::string_view, 21> kConditionNames = {
    "FSPANNED_EPS_UNCORR", "SIGMA_DECOMP",      "PHI_FULL_RANK",
    "F_EPS_UNCORR",        "TRADABLE_TRIPLE_EQ", "TRIVIAL_INTERSECT",
    "EPS_ORTHO",           "SIGEPS_RANK_DEFICIENT", "PROJ",
    "PROJ_SELF_ADJOINT",   "CS_ORTHO",          "W_IDEMPOTENT_ON_PHI",
    "RESID_UNPRICED",      "MU_REPRODUCED",     "CHARS_ARE_COVS",
    "NA",                  "SR_EQUALITY",       "SPANNING",
    "MVE_SPANNED",         "SDF_SPANNED",       "LEMCEX_VECTOR_EQ",
};

double rel_residual(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max({1.0, a.norm(), b.norm()});
}

double rel_residual(const Vector& a, const Vector& b) {
    return (a - b).norm() / std::max({1.0, a.norm(), b.norm()});
}

// All condition evaluations share the derived moments and a handful of
// pseudoinverse-based objects; this context computes them once per instance.
struct Context {
    const CrossSectionMoments& moments;
    const Characteristics& phi;
    const FactorWeights& w;
    const Tolerance& tol;

    FactorModelMoments fm;
    Matrix loading;           // Phi W^T
    Matrix sigma_projector;   // Sigma Sigma^+
    portfolio::MVEResult asset_mve;
    portfolio::MVEResult factor_mve;

    Context(const CrossSectionMoments& moments_in, const Characteristics& phi_in,
            const FactorWeights& w_in, const Tolerance& tol_in)
        : moments(moments_in), phi(phi_in), w(w_in), tol(tol_in) {
        fm = derive_factor_moments(moments, phi, w, tol);
        loading = phi.phi * w.w.transpose();
        sigma_projector = linalg::image_projector(moments.sigma, tol);
        asset_mve = portfolio::mve_unchecked(moments.mu, moments.sigma, tol);
        factor_mve = portfolio::mve_unchecked(fm.mu_f, fm.sigma_f, tol);
    }

    ConditionReport evaluate(ConditionId id) const;
};

ConditionReport Context::evaluate(ConditionId id) const {
    const Matrix& sigma = moments.sigma;
    const Vector& mu = moments.mu;
    const Index n = moments.n();
    const Index m = phi.m();

    ConditionReport report;
    report.id = id;

    switch (id) {
        case ConditionId::FSPANNED_EPS_UNCORR: {
            // cov(Phi f, eps) = Phi W^T Sigma - Phi W^T Sigma W Phi^T
            const double scale = std::max(
                {1.0, (loading * sigma).norm(), (loading * sigma * loading.transpose()).norm()});
            report.residual = fm.cross_spanned_eps.norm() / scale;
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::SIGMA_DECOMP: {
            const Matrix reassembled =
                phi.phi * fm.sigma_f * phi.phi.transpose() + fm.sigma_eps;
            report.residual = rel_residual(sigma, reassembled);
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::PHI_FULL_RANK: {
            const Index rank = linalg::rank_of(phi.phi, tol);
            report.residual = static_cast<double>(m - rank);
            report.holds = rank == m;
            break;
        }
        case ConditionId::F_EPS_UNCORR: {
            // cov(f, eps) = W^T Sigma - Sigma_f Phi^T
            const Matrix lhs = w.w.transpose() * sigma;
            const Matrix rhs = fm.sigma_f * phi.phi.transpose();
            report.residual = rel_residual(lhs, rhs);
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::TRADABLE_TRIPLE_EQ: {
            const Matrix left = sigma * w.w * phi.phi.transpose();
            const Matrix middle = loading * sigma * w.w * phi.phi.transpose();
            const Matrix right = loading * sigma;
            report.residual =
                std::max(rel_residual(left, middle), rel_residual(middle, right));
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::TRIVIAL_INTERSECT: {
            const Matrix wt = w.w.transpose();
            const Index rank_w = linalg::rank_of(wt, tol);
            const Index rank_pw = linalg::rank_of(phi.phi * wt, tol);
            report.residual = static_cast<double>(rank_w - rank_pw);
            report.holds = rank_w == rank_pw;
            break;
        }
        case ConditionId::EPS_ORTHO: {
            const Matrix product = loading * fm.sigma_eps;
            const double scale =
                std::max(1.0, loading.norm() * fm.sigma_eps.norm());
            report.residual = product.norm() / scale;
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::SIGEPS_RANK_DEFICIENT: {
            // The rank of sigma_eps is judged at the scale of sigma: a
            // residual covariance that vanishes up to rounding (e.g. when
            // Phi W^T is the identity map) must read as zero rather than as
            // full-rank noise.
            Eigen::SelfAdjointEigenSolver<Matrix> es(
                0.5 * (fm.sigma_eps + fm.sigma_eps.transpose()), Eigen::EigenvaluesOnly);
            const double lambda_max = es.eigenvalues().maxCoeff();
            const double cutoff = tol.rel_rank_tol * std::max(lambda_max, sigma.norm());
            Index rank = 0;
            for (Index i = 0; i < n; ++i) {
                if (es.eigenvalues()(i) > cutoff) {
                    ++rank;
                }
            }
            report.holds = rank < n;
            const double lambda_min = std::max(0.0, es.eigenvalues().minCoeff());
            report.residual = lambda_min / std::max({lambda_max, sigma.norm(), 1.0});
            break;
        }
        case ConditionId::PROJ: {
            report.residual = rel_residual(loading * loading, loading);
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::PROJ_SELF_ADJOINT: {
            report.residual = rel_residual(loading, Matrix(loading.transpose()));
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::CS_ORTHO: {
            const ConditionReport proj = evaluate(ConditionId::PROJ);
            const ConditionReport adj = evaluate(ConditionId::PROJ_SELF_ADJOINT);
            report.residual = std::max(proj.residual, adj.residual);
            report.holds = proj.holds && adj.holds;
            report.detail =
                "moment-level sufficient condition (orthogonal projection); "
                "see check_cs_ortho_on_sample for the realized form";
            break;
        }
        case ConditionId::W_IDEMPOTENT_ON_PHI: {
            const Matrix wt = w.w.transpose();
            report.residual = rel_residual(wt * phi.phi * wt, wt);
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::RESID_UNPRICED: {
            report.residual = fm.mu_eps.norm() / std::max(1.0, mu.norm());
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::MU_REPRODUCED: {
            report.residual = rel_residual(mu, Vector(loading * mu));
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::CHARS_ARE_COVS: {
            const Matrix gram = fm.sigma_f + fm.mu_f * fm.mu_f.transpose();
            const Matrix lhs = phi.phi * gram;
            const Matrix rhs = fm.cross_xf + mu * fm.mu_f.transpose();
            report.residual = rel_residual(lhs, rhs);
            report.holds = report.residual <= tol.abs_residual_tol;
            report.detail = linalg::rank_of(gram, tol) == m
                                ? "minimizer unique (factor Gram matrix has full rank)"
                                : "minimizer not unique (factor Gram matrix is rank deficient)";
            break;
        }
        case ConditionId::NA: {
            const auto check = linalg::in_image(mu, sigma, tol);
            report.residual = check.residual / std::max(1.0, mu.norm());
            report.holds = check.in_image;
            if (!report.holds) {
                report.witness = Vector(mu - sigma_projector * mu);
                report.detail = "witness: risk-free arbitrage component of mu";
            }
            break;
        }
        case ConditionId::SR_EQUALITY: {
            report.residual = std::abs(asset_mve.sr_squared - factor_mve.sr_squared) /
                              std::max(1.0, asset_mve.sr_squared);
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::SPANNING: {
            const Matrix sigma_w = sigma * w.w;
            const Vector c = linalg::pinv(sigma_w, tol) * mu;
            report.residual = (sigma_w * c - mu).norm() / std::max(1.0, mu.norm());
            report.holds = report.residual <= tol.abs_residual_tol;
            if (report.holds) {
                report.witness = c;
                report.detail = "witness: least-squares coefficients with mu = Sigma W c";
            }
            break;
        }
        case ConditionId::MVE_SPANNED: {
            const Vector factor_loadings = w.w * factor_mve.weights;
            const Vector projected = sigma_projector * factor_loadings;
            report.residual = (projected - asset_mve.weights).norm() /
                              std::max(1.0, asset_mve.weights.norm());
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::SDF_SPANNED: {
            const auto asset = portfolio::sdf_unchecked(mu, sigma, tol);
            const auto factor = portfolio::sdf_unchecked(fm.mu_f, fm.sigma_f, tol);
            const Vector factor_loadings_on_x = w.w * factor.loadings;
            const double intercept_gap = std::abs(asset.intercept - factor.intercept) /
                                         std::max(1.0, std::abs(asset.intercept));
            const double loading_gap =
                (sigma_projector * factor_loadings_on_x - asset.loadings).norm() /
                std::max(1.0, asset.loadings.norm());
            report.residual = std::max(intercept_gap, loading_gap);
            report.holds = report.residual <= tol.abs_residual_tol;
            break;
        }
        case ConditionId::LEMCEX_VECTOR_EQ: {
            const Matrix a = sigma * w.w * phi.phi.transpose();
            const Vector b = linalg::pinv(a, tol) * mu;
            const double member_residual =
                (a * b - mu).norm() / std::max(1.0, mu.norm());
            if (member_residual > tol.abs_residual_tol) {
                report.residual = member_residual;
                report.holds = false;
                report.detail = "no witness: mu is outside Im(Sigma W Phi^T)";
                break;
            }
            const Vector lhs = a * b;
            const Vector rhs = loading * lhs;
            const double eq_residual = rel_residual(lhs, rhs);
            report.residual = std::max(member_residual, eq_residual);
            report.holds = eq_residual <= tol.abs_residual_tol;
            if (report.holds) {
                report.witness = b;
                report.detail = "witness: least-squares b (uniqueness not claimed)";
            }
            break;
        }
    }
    return report;
}

EdgeStatus implication(bool premise, bool conclusion) {
    if (!premise) {
        return EdgeStatus::vacuous;
    }
    return conclusion ? EdgeStatus::confirmed : EdgeStatus::violated;
}

EdgeStatus equivalence(bool a, bool b) {
    return a == b ? EdgeStatus::confirmed : EdgeStatus::violated;
}

}  // namespace

std::string_view to_string(ConditionId id) {
    return kConditionNames[static_cast<std::size_t>(id)];
}

std::optional<ConditionId> condition_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kConditionNames.size(); ++i) {
        if (kConditionNames[i] == name) {
            return static_cast<ConditionId>(i);
        }
    }
    return std::nullopt;
}

std::string_view to_string(EdgeStatus status) {
    switch (status) {
        case EdgeStatus::vacuous:
            return "vacuous";
        case EdgeStatus::confirmed:
            return "confirmed";
        case EdgeStatus::violated:
            return "VIOLATED";
    }
    return "?";
}

bool ImplicationGraphReport::any_violated() const {
    return std::any_of(edges.begin(), edges.end(), [](const ImplicationEdge& e) {
        return e.status == EdgeStatus::violated;
    });
}

ConditionReport check(ConditionId id, const CrossSectionMoments& moments,
                      const Characteristics& phi, const FactorWeights& w,
                      const Tolerance& tol) {
    return Context(moments, phi, w, tol).evaluate(id);
}

std::vector<ConditionReport> run_all(const CrossSectionMoments& moments,
                                     const Characteristics& phi,
                                     const FactorWeights& w, const Tolerance& tol) {
    Context context(moments, phi, w, tol);
    std::vector<ConditionReport> reports;
    reports.reserve(all_conditions.size());
    for (ConditionId id : all_conditions) {
        reports.push_back(context.evaluate(id));
    }
    return reports;
}

bool factor_model_nondegenerate(const Characteristics& phi, const FactorWeights& w,
                                const Tolerance& tol) {
    return (phi.phi * w.w.transpose()).norm() > tol.abs_residual_tol;
}

ImplicationGraphReport verify_implication_graph(const std::vector<ConditionReport>& reports,
                                                bool phi_w_nonzero,
                                                const Tolerance& tol) {
    (void)tol;
    auto holds = [&reports](ConditionId id) {
        for (const auto& r : reports) {
            if (r.id == id) {
                return r.holds;
            }
        }
        throw std::invalid_argument("verify_implication_graph: report list is missing " +
                                    std::string(to_string(id)));
    };

    const bool triple = holds(ConditionId::TRADABLE_TRIPLE_EQ);
    const bool eps_ortho = holds(ConditionId::EPS_ORTHO);
    const bool rank_deficient = holds(ConditionId::SIGEPS_RANK_DEFICIENT);
    const bool w_idem = holds(ConditionId::W_IDEMPOTENT_ON_PHI);
    const bool self_adjoint = holds(ConditionId::PROJ_SELF_ADJOINT);
    const bool cs_ortho = holds(ConditionId::CS_ORTHO);
    const bool f_eps = holds(ConditionId::F_EPS_UNCORR);
    const bool unpriced = holds(ConditionId::RESID_UNPRICED);
    const bool chars_covs = holds(ConditionId::CHARS_ARE_COVS);
    const bool spanning = holds(ConditionId::SPANNING);
    const bool sr_eq = holds(ConditionId::SR_EQUALITY);

    ImplicationGraphReport graph;
    graph.edges = {
        {"TRADABLE_TRIPLE_EQ => EPS_ORTHO", implication(triple, eps_ortho)},
        {"EPS_ORTHO & nondegenerate => SIGEPS_RANK_DEFICIENT",
         implication(eps_ortho && phi_w_nonzero, rank_deficient)},
        {"W_IDEMPOTENT_ON_PHI & PROJ_SELF_ADJOINT => CS_ORTHO",
         implication(w_idem && self_adjoint, cs_ortho)},
        {"CS_ORTHO => EPS_ORTHO", implication(cs_ortho, eps_ortho)},
        {"F_EPS_UNCORR => EPS_ORTHO", implication(f_eps, eps_ortho)},
        {"TRADABLE_TRIPLE_EQ & W_IDEMPOTENT_ON_PHI & SPANNING => RESID_UNPRICED",
         implication(triple && w_idem && spanning, unpriced)},
        {"F_EPS_UNCORR & RESID_UNPRICED => CHARS_ARE_COVS",
         implication(f_eps && unpriced, chars_covs)},
        {"(F_EPS_UNCORR | TRADABLE_TRIPLE_EQ) & RESID_UNPRICED => SPANNING",
         implication((f_eps || triple) && unpriced, spanning)},
        {"SPANNING <=> SR_EQUALITY", equivalence(spanning, sr_eq)},
    };
    return graph;
}

ConditionReport check_cs_ortho_on_sample(const ReturnSample& x,
                                         const Characteristics& phi,
                                         const FactorWeights& w, const Tolerance& tol) {
    const FactorRealization realized = realize_factors(x, phi, w);
    const Vector spanned = phi.phi * realized.f;
    const double value = spanned.dot(realized.eps);

    ConditionReport report;
    report.id = ConditionId::CS_ORTHO;
    report.residual =
        std::abs(value) / std::max(1.0, spanned.norm() * realized.eps.norm());
    report.holds = report.residual <= tol.abs_residual_tol;
    report.detail = "sample-path evaluation of (Phi f)^T eps";
    return report;
}

}  // namespace clfm::diagnostics
