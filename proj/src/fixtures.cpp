#include "clfm/fixtures.hpp"

#include "clfm/builders.hpp"

#include <cmath>

namespace clfm::fixtures {

namespace {

void validate_params(const Example3Params& p) {
    if (!(p.a1 > 0.0) || !(p.a2 > 0.0) || !(p.a3 > 0.0)) {
        throw std::invalid_argument("example3: variances a1, a2, a3 must be positive");
    }
    if (!std::isfinite(p.b1) || !std::isfinite(p.b2) || !std::isfinite(p.b3) ||
        !std::isfinite(p.rho)) {
        throw std::invalid_argument("example3: parameters must be finite");
    }
    if (p.continuation) {
        if (p.rho == 0.0) {
            throw std::invalid_argument("example3 continuation: rho must be nonzero");
        }
        if (p.b2 != p.b1) {
            throw std::invalid_argument("example3 continuation: b2 must equal b1");
        }
        const double expected_b3 = (1.0 - p.rho) * p.b1 / p.a1 +
                                   (1.0 - p.rho) * p.b1 / p.a2 + p.b1 * p.a3 / p.rho;
        if (std::abs(p.b3 - expected_b3) >
            1e-12 * std::max(1.0, std::abs(expected_b3))) {
            throw std::invalid_argument(
                "example3 continuation: b3 does not match the closed form");
        }
    }
}

}  // namespace

Example3Params Example3Params::base() { return Example3Params{}; }

Example3Params Example3Params::base(double a1, double a2, double a3, double b1,
                                    double b2, double b3, double rho) {
    Example3Params p;
    p.a1 = a1;
    p.a2 = a2;
    p.a3 = a3;
    p.b1 = b1;
    p.b2 = b2;
    p.b3 = b3;
    p.rho = rho;
    p.continuation = false;
    return p;
}

Example3Params Example3Params::continuation_mode(double a1, double a2, double a3,
                                                 double b1, double rho) {
    if (rho == 0.0) {
        throw std::invalid_argument("example3 continuation: rho must be nonzero");
    }
    Example3Params p;
    p.a1 = a1;
    p.a2 = a2;
    p.a3 = a3;
    p.b1 = b1;
    p.b2 = b1;
    p.b3 = (1.0 - rho) * b1 / a1 + (1.0 - rho) * b1 / a2 + b1 * a3 / rho;
    p.rho = rho;
    p.continuation = true;
    return p;
}

Example3Params Example3Params::continuation_mode() {
    return continuation_mode(1.0, 2.0, 4.0, 1.0, 0.5);
}

Example3Instance example3_instance(const Example3Params& p) {
    validate_params(p);

    Example3Instance out;
    out.moments.date_label = p.continuation ? "example3-continuation" : "example3";
    out.moments.mu = Vector(3);
    out.moments.mu << p.b1, p.b2, p.rho * p.b1 / p.a1 + p.rho * p.b2 / p.a2 + p.b3;

    out.moments.sigma = Matrix(3, 3);
    out.moments.sigma << p.a1, 0.0, p.rho,
        0.0, p.a2, p.rho,
        p.rho, p.rho, p.rho / p.a1 + p.rho / p.a2 + p.a3;

    out.phi.phi = Matrix(3, 2);
    out.phi.phi << 1.0, 0.0,
        1.0, 0.0,
        0.0, 1.0;

    out.w = builders::build_ols(out.phi, Tolerance{});
    return out;
}

std::vector<ExpectedStatus> example3_expected_reports(const Example3Params& p) {
    validate_params(p);
    std::vector<ExpectedStatus> expected;
    if (!p.continuation) {
        expected.push_back({diagnostics::ConditionId::EPS_ORTHO, true, std::nullopt});
        expected.push_back({diagnostics::ConditionId::CS_ORTHO, true, std::nullopt});
        // cov(Phi f, eps) vanishes exactly when the first two driver variances agree.
        expected.push_back({diagnostics::ConditionId::FSPANNED_EPS_UNCORR,
                            p.a1 == p.a2, std::nullopt});
    } else {
        expected.push_back({diagnostics::ConditionId::MU_REPRODUCED, true, std::nullopt});
        Vector witness(2);
        witness << 0.0, p.b1 / p.rho;
        expected.push_back({diagnostics::ConditionId::SPANNING, true, witness});
        expected.push_back({diagnostics::ConditionId::TRADABLE_TRIPLE_EQ,
                            p.a1 == p.a2, std::nullopt});
    }
    return expected;
}

}  // namespace clfm::fixtures
