#pragma once

// Shared random-instance generators for the property tests. Everything is
// seeded explicitly so failures reproduce.

#include "clfm/builders.hpp"
#include "clfm/generative.hpp"
#include "clfm/linalg.hpp"
#include "clfm/model.hpp"

#include <cmath>
#include <random>

namespace clfm::testing {

inline double standard_normal(std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            out(i, j) = standard_normal(rng);
        }
    }
    return out;
}

inline Vector random_vector(std::mt19937_64& rng, Index size) {
    Vector out(size);
    for (Index i = 0; i < size; ++i) {
        out(i) = standard_normal(rng);
    }
    return out;
}

// rank 0 gives the zero matrix.
inline Matrix random_matrix_with_rank(std::mt19937_64& rng, Index rows, Index cols,
                                      Index rank) {
    if (rank == 0) {
        return Matrix::Zero(rows, cols);
    }
    return random_matrix(rng, rows, rank) * random_matrix(rng, rank, cols);
}

inline Matrix random_psd(std::mt19937_64& rng, Index n, Index rank) {
    if (rank == 0) {
        return Matrix::Zero(n, n);
    }
    const Matrix b = random_matrix(rng, n, rank);
    return b * b.transpose();
}

// PSD matrix of exact rank with eigenvalues log-uniform in [lo, hi]; bounded
// conditioning keeps property-test residuals far from decision thresholds.
inline Matrix random_psd_with_spectrum(std::mt19937_64& rng, Index n, Index rank,
                                       double lo = 0.3, double hi = 3.0) {
    if (rank == 0) {
        return Matrix::Zero(n, n);
    }
    const Matrix basis =
        linalg::image_basis(random_matrix(rng, n, rank), Tolerance{}).basis;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vector d(basis.cols());
    for (Index i = 0; i < d.size(); ++i) {
        d(i) = lo * std::pow(hi / lo, uniform(rng));
    }
    return basis * d.asDiagonal() * basis.transpose();
}

// Random cross-section with sigma of the requested rank and mu ∈ Im(sigma),
// so the weak no-arbitrage condition holds.
inline CrossSectionMoments random_arbitrage_free_moments(std::mt19937_64& rng, Index n,
                                                         Index sigma_rank) {
    CrossSectionMoments moments;
    moments.sigma = random_psd_with_spectrum(rng, n, sigma_rank);
    moments.mu = moments.sigma * random_vector(rng, n);
    moments.date_label = "random";
    return moments;
}

struct CampaignInstance {
    CrossSectionMoments moments;
    Characteristics phi;
    FactorWeights w;
    bool spanning_by_construction = false;
};

// Instance mix for the spanning-equivalence campaign: covers singular sigma,
// singular sigma_f, rank-deficient phi, m > n, weight matrices from every
// builder as well as arbitrary ones, and both spanning and non-spanning risk
// premia (all arbitrage-free).
inline CampaignInstance random_campaign_instance(std::mt19937_64& rng, int index) {
    CampaignInstance instance;
    const Index n = 2 + static_cast<Index>(rng() % 6);  // 2..7
    Index m = 1 + static_cast<Index>(rng() % (n + 2));  // allows m > n
    if (m > 8) {
        m = 8;
    }

    switch (index % 5) {
        case 0:
            instance.phi.phi = random_matrix(rng, n, m);
            break;
        case 1: {  // rank-deficient phi via duplicated column
            instance.phi.phi = random_matrix(rng, n, m);
            if (m >= 2) {
                instance.phi.phi.col(m - 1) = instance.phi.phi.col(0);
            }
            break;
        }
        default:
            instance.phi.phi = random_matrix_with_rank(
                rng, n, m,
                static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min(n, m) + 1)));
            break;
    }

    const Index sigma_rank = 1 + static_cast<Index>(rng() % n);
    instance.moments.sigma = random_psd_with_spectrum(rng, n, sigma_rank);
    instance.moments.date_label = "campaign";

    switch (index % 7) {
        case 0:
            instance.w = builders::build_ols(instance.phi, Tolerance{});
            break;
        case 1:
            instance.w = builders::build_gls(
                instance.phi,
                random_psd_with_spectrum(rng, n, 1 + static_cast<Index>(rng() % n)),
                Tolerance{});
            break;
        case 2:
            instance.w = builders::build_general_form(instance.phi,
                                                      random_matrix(rng, m, m),
                                                      random_matrix(rng, n, n),
                                                      Tolerance{})
                             .weights;
            break;
        case 3:
            instance.w = FactorWeights{Matrix::Zero(n, m)};
            break;
        default:
            instance.w = FactorWeights{random_matrix(rng, n, m)};
            break;
    }

    if (index % 2 == 0) {
        // mu = Sigma W c: the spanning condition holds by construction.
        instance.moments.mu =
            instance.moments.sigma * instance.w.w * random_vector(rng, m);
        instance.spanning_by_construction = true;
    } else {
        // mu ∈ Im(Sigma) only: arbitrage-free, spanning generically fails.
        instance.moments.mu = instance.moments.sigma * random_vector(rng, n);
    }
    return instance;
}

// Instances built from a generative spec; on these the uncorrelatedness
// conditions hold, which keeps the premise side of the implication campaign
// populated.
inline CampaignInstance generative_campaign_instance(std::mt19937_64& rng, int index) {
    generative::RandomSpecOptions options;
    options.n = 3 + static_cast<Index>(index % 4);
    options.m = 1 + static_cast<Index>(index % 3);
    options.eta_rank = static_cast<Index>(index % (options.n + 1));
    options.duplicate_phi_column = options.m >= 2 && index % 3 == 0;
    const auto spec = generative::random_spec(rng, options);

    CampaignInstance instance;
    instance.moments = generative::implied_moments(spec);
    instance.moments.date_label = "generative";
    instance.phi.phi = spec.phi;
    instance.w = builders::build_gls_type_generative(spec, Tolerance{}).weights;
    instance.spanning_by_construction = true;
    return instance;
}

}  // namespace clfm::testing
