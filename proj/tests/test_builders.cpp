#include "clfm/builders.hpp"

#include "clfm/linalg.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace clfm;
using namespace clfm::builders;

namespace {

const Tolerance tol{};

Characteristics example3_phi() {
    Matrix phi(3, 2);
    phi << 1, 0,
        1, 0,
        0, 1;
    return Characteristics{phi};
}

double idempotency_residual(const Characteristics& phi, const FactorWeights& w) {
    const Matrix wt = w.w.transpose();
    return (wt * phi.phi * wt - wt).norm() / std::max(1.0, wt.norm());
}

// ker(Phi W^T) = ker(W^T), tested through mutual containment of the two
// orthonormal kernel bases.
bool kernels_coincide(const Characteristics& phi, const FactorWeights& w) {
    const Matrix wt = w.w.transpose();
    const Matrix k1 = linalg::kernel_basis(phi.phi * wt, tol).basis;
    const Matrix k2 = linalg::kernel_basis(wt, tol).basis;
    if (k1.cols() != k2.cols()) {
        return false;
    }
    const Matrix p1 = k1 * k1.transpose();
    const Matrix p2 = k2 * k2.transpose();
    return (p1 * k2 - k2).norm() <= 1e-8 && (p2 * k1 - k1).norm() <= 1e-8;
}

}  // namespace

TEST_CASE("OLS weights on reference and trivial instances") {
    const auto w = build_ols(example3_phi(), tol);
    Matrix expected_wt(2, 3);
    expected_wt << 0.5, 0.5, 0,
        0, 0, 1;
    CHECK((w.w.transpose() - expected_wt).norm() < 1e-12);

    const auto identity = build_ols(Characteristics{Matrix::Identity(3, 3)}, tol);
    CHECK((identity.w - Matrix::Identity(3, 3)).norm() < 1e-12);

    // Phi W^T is the orthogonal projector onto Im(Phi).
    const Matrix loading = example3_phi().phi * w.w.transpose();
    CHECK((loading - loading.transpose()).norm() < 1e-12);
    CHECK((loading * loading - loading).norm() < 1e-12);
    CHECK((loading - linalg::image_projector(example3_phi().phi, tol)).norm() < 1e-12);
}

TEST_CASE("OLS tolerates rank-deficient phi") {
    std::mt19937_64 rng(21);
    Matrix phi = testing::random_matrix(rng, 5, 3);
    phi.col(2) = phi.col(0);  // duplicated column
    const Characteristics chars{phi};
    const auto w = build_ols(chars, tol);
    CHECK(idempotency_residual(chars, w) <= 1e-10);
}

TEST_CASE("GLS reduces to OLS for scalar residual covariance") {
    const auto chars = example3_phi();
    const auto ols = build_ols(chars, tol);

    const auto gls_identity = build_gls(chars, Matrix::Identity(3, 3), tol);
    CHECK((gls_identity.w - ols.w).norm() < 1e-10);

    const auto gls_scaled = build_gls(chars, 3.7 * Matrix::Identity(3, 3), tol);
    CHECK((gls_scaled.w - ols.w).norm() < 1e-10);
}

TEST_CASE("GLS weights satisfy the idempotency identity") {
    std::mt19937_64 rng(22);
    const auto chars = example3_phi();
    for (int trial = 0; trial < 20; ++trial) {
        Matrix diag = Matrix::Zero(3, 3);
        for (Index i = 0; i < 3; ++i) {
            diag(i, i) = 0.1 + std::abs(testing::standard_normal(rng));
        }
        const auto w = build_gls(chars, diag, tol);
        CHECK(idempotency_residual(chars, w) <= 1e-10);
    }
    CHECK_THROWS_AS(build_gls(chars, -Matrix::Identity(3, 3), tol), std::invalid_argument);
}

TEST_CASE("general form covers OLS, GLS, and rotated GLS") {
    const auto chars = example3_phi();
    const auto ols = build_ols(chars, tol);

    const auto with_identities = build_general_form(chars, Matrix::Identity(2, 2),
                                                    Matrix::Identity(3, 3), tol);
    CHECK((with_identities.weights.w - ols.w).norm() < 1e-12);
    CHECK(with_identities.idempotency_holds);
    CHECK(with_identities.image_condition_holds);
    REQUIRE(with_identities.image_match_residual.has_value());
    CHECK(*with_identities.image_match_residual <= 1e-10);

    std::mt19937_64 rng(23);
    const Matrix sigma_eps = testing::random_psd(rng, 3, 3);
    const Matrix s = linalg::psd_root_of_pinv(sigma_eps, tol);
    const auto gls_direct = build_gls(chars, sigma_eps, tol);
    const auto gls_general = build_general_form(chars, Matrix::Identity(2, 2), s, tol);
    CHECK((gls_general.weights.w - gls_direct.w).norm() < 1e-10);

    for (int trial = 0; trial < 20; ++trial) {
        Matrix r = testing::random_matrix(rng, 2, 2);
        while (linalg::rank_of(r, tol) < 2) {
            r = testing::random_matrix(rng, 2, 2);
        }
        const auto rotated =
            build_general_form(chars, r, testing::random_matrix(rng, 3, 3), tol);
        CHECK(rotated.idempotency_holds);
    }
}

TEST_CASE("every builder output satisfies the idempotency identity") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 60; ++trial) {
        const Index n = 2 + static_cast<Index>(rng() % 5);
        const Index m = 1 + static_cast<Index>(rng() % (n + 1));
        const Index phi_rank = static_cast<Index>(
            rng() % static_cast<std::uint64_t>(std::min(n, m) + 1));
        const Characteristics chars{testing::random_matrix_with_rank(rng, n, m, phi_rank)};

        FactorWeights w;
        switch (trial % 3) {
            case 0:
                w = build_ols(chars, tol);
                break;
            case 1:
                w = build_gls(chars, testing::random_psd(rng, n, 1 + static_cast<Index>(rng() % n)),
                              tol);
                break;
            default:
                w = build_general_form(chars, testing::random_matrix(rng, m, m),
                                       testing::random_matrix(rng, n, n), tol)
                        .weights;
                break;
        }
        CHECK(idempotency_residual(chars, w) <= 1e-8);
        CHECK(kernels_coincide(chars, w));

        // Idempotency forces the trivial-intersection condition.
        CHECK(linalg::trivial_intersection(w.w.transpose(), chars.phi, tol));
    }
}

TEST_CASE("extend_to_invertible on closed-form cases") {
    std::mt19937_64 rng(31);
    Matrix invertible = testing::random_matrix(rng, 4, 4);
    while (linalg::rank_of(invertible, tol) < 4) {
        invertible = testing::random_matrix(rng, 4, 4);
    }
    CHECK((extend_to_invertible(invertible, tol) - invertible).norm() < 1e-12);

    const Matrix from_zero = extend_to_invertible(Matrix::Zero(2, 2), tol);
    CHECK(linalg::rank_of(from_zero, tol) == 2);
    CHECK((from_zero * from_zero.transpose() - Matrix::Identity(2, 2)).norm() < 1e-12);

    Matrix u = Matrix::Zero(2, 2);
    u(0, 0) = 1.0;
    CHECK((extend_to_invertible(u, tol) - Matrix::Identity(2, 2)).norm() < 1e-12);

    CHECK_THROWS_AS(extend_to_invertible(Matrix::Zero(2, 3), tol), std::invalid_argument);
}

TEST_CASE("extend_to_invertible restriction properties across all ranks") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + static_cast<Index>(rng() % 6);
        const Index rank = static_cast<Index>(rng() % static_cast<std::uint64_t>(n + 1));
        const Matrix u = testing::random_matrix_with_rank(rng, n, n, rank);
        const Matrix s = extend_to_invertible(u, tol);

        CHECK(linalg::rank_of(s, tol) == n);

        const Matrix coimage = linalg::image_basis(Matrix(u.transpose()), tol).basis;
        CHECK((s * coimage - u * coimage).norm() <= 1e-8 * std::max(1.0, u.norm()));

        const Matrix image = linalg::image_basis(u, tol).basis;
        CHECK((s.transpose() * image - u.transpose() * image).norm() <=
              1e-8 * std::max(1.0, u.norm()));

        const Matrix kernel = linalg::kernel_basis(u, tol).basis;
        const Matrix mapped = s * kernel;
        CHECK(linalg::rank_of(mapped, tol) == kernel.cols());
        // mapped columns live in ker(U^T) = Im(U)^perp
        CHECK((image.transpose() * mapped).norm() <= 1e-8);
    }
}

TEST_CASE("generative weights reduce to OLS in the isotropic and zero cases") {
    const auto chars = example3_phi();
    const auto ols = build_ols(chars, tol);

    generative::GenerativeSpec spec;
    spec.phi = chars.phi;
    spec.mu_g = Vector::Zero(2);
    spec.sigma_g = Matrix::Identity(2, 2);

    spec.sigma_eta = 2.5 * Matrix::Identity(3, 3);
    const auto isotropic = build_gls_type_generative(spec, tol);
    CHECK((isotropic.weights.w - ols.w).norm() < 1e-10);
    CHECK(isotropic.projector_onto_phi);

    spec.sigma_eta = Matrix::Zero(3, 3);
    const auto degenerate = build_gls_type_generative(spec, tol);
    CHECK((degenerate.weights.w - ols.w).norm() < 1e-10);
    CHECK(degenerate.projector_onto_phi);
}

TEST_CASE("generative weights pass the projection check on singular noise") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        generative::RandomSpecOptions options;
        options.n = 6;
        options.m = 2;
        options.eta_rank = static_cast<Index>(rng() % 7);
        options.duplicate_phi_column = trial % 2 == 0;
        const auto spec = generative::random_spec(rng, options);
        const auto result = build_gls_type_generative(spec, tol);
        CHECK(result.projector_onto_phi);
        CHECK(result.projector_idempotency_residual <= 1e-8);
        CHECK(result.projector_image_residual <= 1e-8);
        CHECK(idempotency_residual(Characteristics{spec.phi}, result.weights) <= 1e-8);
    }
}

TEST_CASE("recipe resolution") {
    const auto chars = example3_phi();
    const auto ols = build_ols(chars, tol);

    WeightRecipe recipe;
    recipe.kind = WeightKind::ols;
    CHECK((build_from_recipe(chars, recipe, tol).w - ols.w).norm() == 0.0);

    recipe.kind = WeightKind::gls;
    CHECK_THROWS_AS(build_from_recipe(chars, recipe, tol), std::invalid_argument);
    recipe.sigma_eps = Matrix::Identity(3, 3);
    CHECK((build_from_recipe(chars, recipe, tol).w - ols.w).norm() < 1e-10);

    WeightRecipe general;
    general.kind = WeightKind::general_form;
    CHECK_THROWS_AS(build_from_recipe(chars, general, tol), std::invalid_argument);

    WeightRecipe generative_recipe;
    generative_recipe.kind = WeightKind::gls_type_generative;
    generative_recipe.sigma_eta = Matrix::Identity(3, 3);
    CHECK((build_from_recipe(chars, generative_recipe, tol).w - ols.w).norm() < 1e-10);
}
