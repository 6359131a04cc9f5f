#pragma once

#include "clfm/diagnostics.hpp"
#include "clfm/model.hpp"

#include <optional>
#include <vector>

namespace clfm::fixtures {

/// Parameters of the three-asset, two-factor counterexample instance built
/// from uncorrelated drivers with variances a_i and means b_i. In
/// continuation mode b2 = b1 is forced and b3 is computed from the closed
/// form that makes the spanning condition hold, so inconsistent fixtures
/// cannot be constructed.
struct Example3Params {
    double a1 = 1.0, a2 = 2.0, a3 = 4.0;
    double b1 = 1.0, b2 = 3.0, b3 = 2.0;
    double rho = 0.5;
    bool continuation = false;

    static Example3Params base();
    static Example3Params base(double a1, double a2, double a3, double b1, double b2,
                               double b3, double rho);
    /// b2 = b1; b3 = (1 - rho) b1 / a1 + (1 - rho) b1 / a2 + b1 a3 / rho.
    static Example3Params continuation_mode(double a1, double a2, double a3, double b1,
                                            double rho);
    static Example3Params continuation_mode();
};

struct Example3Instance {
    CrossSectionMoments moments;
    Characteristics phi;
    FactorWeights w;  // OLS weights W^T = Phi^+
};

/// mu = (b1, b2, rho b1/a1 + rho b2/a2 + b3),
/// Sigma = [[a1, 0, rho], [0, a2, rho], [rho, rho, rho/a1 + rho/a2 + a3]],
/// phi rows (1,0), (1,0), (0,1), W^T = phi^+.
/// Throws std::invalid_argument on parameter-invariant violations.
Example3Instance example3_instance(const Example3Params& params);

struct ExpectedStatus {
    diagnostics::ConditionId id;
    bool holds = false;
    std::optional<Vector> witness;
};

/// The condition statuses this instance is known to produce: in base mode
/// EPS_ORTHO and CS_ORTHO hold while FSPANNED_EPS_UNCORR fails iff a1 != a2;
/// in continuation mode MU_REPRODUCED and SPANNING hold (witness
/// (0, b1/rho)) while TRADABLE_TRIPLE_EQ fails.
std::vector<ExpectedStatus> example3_expected_reports(const Example3Params& params);

}  // namespace clfm::fixtures
