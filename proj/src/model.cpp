#include "clfm/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace clfm {

namespace {

void append_shape_violations(const CrossSectionMoments& moments,
                             const Characteristics& phi,
                             const FactorWeights& w,
                             std::vector<std::string>& out) {
    const Index n = moments.mu.size();
    if (n < 1) {
        out.push_back("cross-section is empty (n < 1)");
    }
    if (moments.sigma.rows() != n || moments.sigma.cols() != n) {
        std::ostringstream ss;
        ss << "sigma is " << moments.sigma.rows() << "x" << moments.sigma.cols()
           << ", expected " << n << "x" << n;
        out.push_back(ss.str());
    }
    if (phi.phi.rows() != n) {
        std::ostringstream ss;
        ss << "phi has " << phi.phi.rows() << " rows, expected " << n;
        out.push_back(ss.str());
    }
    if (w.w.rows() != n) {
        std::ostringstream ss;
        ss << "w has " << w.w.rows() << " rows, expected " << n;
        out.push_back(ss.str());
    }
    if (phi.phi.cols() != w.w.cols()) {
        std::ostringstream ss;
        ss << "phi has " << phi.phi.cols() << " columns but w has " << w.w.cols();
        out.push_back(ss.str());
    }
}

}  // namespace

FactorModelMoments derive_factor_moments(const CrossSectionMoments& moments,
                                         const Characteristics& phi,
                                         const FactorWeights& w,
                                         const Tolerance& tol) {
    ValidationReport report = validate_cross_section(moments, phi, w, tol);
    if (!report.ok()) {
        std::ostringstream ss;
        ss << "derive_factor_moments: invalid cross-section:";
        for (const auto& v : report.violations) {
            ss << " [" << v << "]";
        }
        throw std::invalid_argument(ss.str());
    }

    const Matrix& sigma = moments.sigma;
    const Matrix& p = phi.phi;
    const Matrix& wm = w.w;
    const Index n = moments.n();

    FactorModelMoments fm;
    fm.mu_f = wm.transpose() * moments.mu;
    fm.sigma_f = wm.transpose() * sigma * wm;
    fm.cross_xf = sigma * wm;
    const Matrix loading = p * wm.transpose();            // Phi W^T
    const Matrix residual_map = Matrix::Identity(n, n) - loading;
    fm.mu_eps = residual_map * moments.mu;
    fm.sigma_eps = residual_map * sigma * residual_map.transpose();
    fm.cross_spanned_eps = loading * sigma * residual_map.transpose();
    return fm;
}

FactorRealization realize_factors(const ReturnSample& x,
                                  const Characteristics& phi,
                                  const FactorWeights& w) {
    if (x.x.size() != phi.phi.rows() || x.x.size() != w.w.rows() ||
        phi.phi.cols() != w.w.cols()) {
        throw std::invalid_argument("realize_factors: shape mismatch");
    }
    require_finite(x.x, "return sample");
    FactorRealization out;
    out.f = w.w.transpose() * x.x;
    out.eps = x.x - phi.phi * out.f;
    return out;
}

ValidationReport validate_cross_section(const CrossSectionMoments& moments,
                                        const Characteristics& phi,
                                        const FactorWeights& w,
                                        const Tolerance& tol) {
    ValidationReport report;
    append_shape_violations(moments, phi, w, report.violations);

    if (!moments.mu.allFinite()) {
        report.violations.push_back("mu contains non-finite entries");
    }
    if (!moments.sigma.allFinite()) {
        report.violations.push_back("sigma contains non-finite entries");
    }
    if (!phi.phi.allFinite()) {
        report.violations.push_back("phi contains non-finite entries");
    }
    if (!w.w.allFinite()) {
        report.violations.push_back("w contains non-finite entries");
    }
    if (!report.ok()) {
        return report;  // shape or finiteness problems make the rest unreliable
    }

    const double asym = (moments.sigma - moments.sigma.transpose()).norm();
    if (asym > tol.abs_residual_tol * std::max(1.0, moments.sigma.norm())) {
        std::ostringstream ss;
        ss << "sigma is not symmetric (asymmetry " << asym << ")";
        report.violations.push_back(ss.str());
        return report;
    }

    const Matrix sym = 0.5 * (moments.sigma + moments.sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        report.violations.push_back("sigma eigendecomposition failed");
        return report;
    }
    const double min_eig = es.eigenvalues().minCoeff();
    // Eigenvalues in [-abs_residual_tol, 0) count as rounding noise; anything
    // below that band is a malformed covariance.
    if (min_eig < -tol.abs_residual_tol) {
        std::ostringstream ss;
        ss << "sigma is not positive semidefinite (min eigenvalue " << min_eig << ")";
        report.violations.push_back(ss.str());
    }
    return report;
}

ValidationReport validate_panel(const PanelSequence& panel, const Tolerance& tol) {
    ValidationReport report;
    Index common_m = -1;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        const PanelDate& date = panel[i];
        ValidationReport date_report =
            validate_cross_section(date.moments, date.phi, date.w, tol);
        for (const auto& v : date_report.violations) {
            report.violations.push_back("date " + date.moments.date_label + ": " + v);
        }
        if (common_m < 0) {
            common_m = date.phi.m();
        } else if (date.phi.m() != common_m) {
            std::ostringstream ss;
            ss << "date " << date.moments.date_label << ": m=" << date.phi.m()
               << " differs from panel m=" << common_m;
            report.violations.push_back(ss.str());
        }
    }
    return report;
}

}  // namespace clfm
