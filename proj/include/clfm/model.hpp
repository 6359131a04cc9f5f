#pragma once

#include "clfm/types.hpp"

#include <string>
#include <vector>

namespace clfm {

/// Population mean vector and covariance matrix of one date's excess returns.
struct CrossSectionMoments {
    Vector mu;             // n expected excess returns
    Matrix sigma;          // n x n covariance, symmetric PSD
    std::string date_label;

    Index n() const { return mu.size(); }
};

/// The n x m matrix of asset characteristics observable at the start of the
/// period. No rank requirement: rank may be below m, and m may exceed n.
struct Characteristics {
    Matrix phi;

    Index n() const { return phi.rows(); }
    Index m() const { return phi.cols(); }
};

/// The n x m portfolio weight matrix defining tradable factors f = W^T x.
struct FactorWeights {
    Matrix w;

    Index n() const { return w.rows(); }
    Index m() const { return w.cols(); }
};

/// Moments of factors, residuals, and their cross-covariances derived from a
/// (mu, sigma, phi, w) quadruple for tradable factors.
struct FactorModelMoments {
    Vector mu_f;               // W^T mu
    Matrix sigma_f;            // W^T Sigma W
    Matrix cross_xf;           // Sigma W, cov of returns with factors
    Vector mu_eps;             // (I - Phi W^T) mu
    Matrix sigma_eps;          // (I - Phi W^T) Sigma (I - Phi W^T)^T
    Matrix cross_spanned_eps;  // Phi W^T Sigma (I - W Phi^T), cov of Phi f with eps
};

/// Realized excess returns for one date.
struct ReturnSample {
    Vector x;
};

/// Realized factors and residuals for one return sample.
struct FactorRealization {
    Vector f;    // W^T x
    Vector eps;  // x - Phi f
};

/// One date of an unbalanced panel. n may vary across dates; m is common.
struct PanelDate {
    CrossSectionMoments moments;
    Characteristics phi;
    FactorWeights w;
};

using PanelSequence = std::vector<PanelDate>;

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

/// Computes all six derived moment blocks by the defining formulas.
/// Throws std::invalid_argument on shape mismatch or non-PSD sigma.
FactorModelMoments derive_factor_moments(const CrossSectionMoments& moments,
                                         const Characteristics& phi,
                                         const FactorWeights& w,
                                         const Tolerance& tol);

/// f = W^T x and eps = x - Phi f, so that x = Phi f + eps exactly.
FactorRealization realize_factors(const ReturnSample& x,
                                  const Characteristics& phi,
                                  const FactorWeights& w);

/// Report-only validation: asymmetry, negative eigenvalues beyond tolerance,
/// shape mismatches, non-finite entries. Never throws.
ValidationReport validate_cross_section(const CrossSectionMoments& moments,
                                        const Characteristics& phi,
                                        const FactorWeights& w,
                                        const Tolerance& tol);

/// Common-m shape validation across a panel. Never throws.
ValidationReport validate_panel(const PanelSequence& panel, const Tolerance& tol);

}  // namespace clfm
