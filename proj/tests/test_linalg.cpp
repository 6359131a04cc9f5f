#include "clfm/linalg.hpp"

#include "support.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <cmath>

using namespace clfm;
using namespace clfm::linalg;

namespace {

const Tolerance tol{};

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Matrix example3_phi() {
    Matrix phi(3, 2);
    phi << 1, 0,
        1, 0,
        0, 1;
    return phi;
}

double penrose_residual(const Matrix& a, const Matrix& ap) {
    const double scale = std::max(1.0, a.norm());
    const double r1 = (a * ap * a - a).norm() / scale;
    const double r2 = (ap * a * ap - ap).norm() / std::max(1.0, ap.norm());
    const Matrix aap = a * ap;
    const Matrix apa = ap * a;
    const double r3 = (aap - aap.transpose()).norm() / std::max(1.0, aap.norm());
    const double r4 = (apa - apa.transpose()).norm() / std::max(1.0, apa.norm());
    return std::max({r1, r2, r3, r4});
}

// Independent intersection oracle: bases of Im(A) and ker(B) are stacked and
// the intersection dimension read off a rank computed by column-pivoted QR,
// not by the SVD path under test.
bool intersection_trivial_oracle(const Matrix& im_a, const Matrix& ker_b_of) {
    Eigen::ColPivHouseholderQR<Matrix> qr_a(im_a);
    const Index rank_a = qr_a.rank();
    Eigen::ColPivHouseholderQR<Matrix> qr_b(ker_b_of.transpose());
    const Index rank_b = qr_b.rank();
    const Index ker_dim = ker_b_of.cols() - rank_b;
    if (rank_a == 0 || ker_dim == 0) {
        return true;
    }
    const Matrix u = image_basis(im_a, tol).basis;
    const Matrix v = kernel_basis(ker_b_of, tol).basis;
    Matrix stacked(u.rows(), u.cols() + v.cols());
    stacked << u, v;
    Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
    const Index intersection_dim = u.cols() + v.cols() - qr.rank();
    return intersection_dim == 0;
}

}  // namespace

TEST_CASE("pinv on diagonal and reference instances") {
    CHECK((pinv(diag2(2, 0), tol) - diag2(0.5, 0)).norm() == doctest::Approx(0.0));

    Matrix expected(2, 3);
    expected << 0.5, 0.5, 0,
        0, 0, 1;
    CHECK((pinv(example3_phi(), tol) - expected).norm() < 1e-12);

    CHECK(pinv(Matrix::Zero(3, 2), tol).isZero(0.0));
}

TEST_CASE("pinv matches the normal-equations inverse on full-rank input") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = testing::random_matrix(rng, 5, 3);
        REQUIRE(rank_of(a, tol) == 3);
        const Matrix gram_route =
            (a.transpose() * a).inverse() * a.transpose();
        CHECK((pinv(a, tol) - gram_route).norm() < 1e-10);
    }
}

TEST_CASE("Penrose conditions across all rank profiles") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Index rows = 1 + static_cast<Index>(rng() % 8);
        const Index cols = 1 + static_cast<Index>(rng() % 8);
        const Index max_rank = std::min(rows, cols);
        const Index rank = static_cast<Index>(rng() % static_cast<std::uint64_t>(max_rank + 1));
        const Matrix a = testing::random_matrix_with_rank(rng, rows, cols, rank);
        const Matrix ap = pinv(a, tol);
        CHECK(penrose_residual(a, ap) <= tol.abs_residual_tol);
        CHECK((pinv(ap, tol) - a).norm() <= tol.abs_residual_tol * std::max(1.0, a.norm()));
    }
}

TEST_CASE("pseudoinverse identities used by the spanning proofs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Index rows = 1 + static_cast<Index>(rng() % 6);
        const Index cols = 1 + static_cast<Index>(rng() % 6);
        const Index rank = static_cast<Index>(
            rng() % static_cast<std::uint64_t>(std::min(rows, cols) + 1));
        const Matrix a = testing::random_matrix_with_rank(rng, rows, cols, rank);
        const Matrix ap = pinv(a, tol);

        const Matrix identity1 = a.transpose() * pinv(a * a.transpose(), tol);
        CHECK((identity1 - ap).norm() <= 1e-8 * std::max(1.0, ap.norm()));

        const Matrix identity2 = pinv(a.transpose() * a, tol);
        CHECK((identity2 - ap * ap.transpose()).norm() <=
              1e-8 * std::max(1.0, identity2.norm()));
    }
}

TEST_CASE("rank_of") {
    CHECK(rank_of(Matrix::Identity(3, 3), tol) == 3);
    CHECK(rank_of(example3_phi(), tol) == 2);
    CHECK(rank_of(Matrix::Zero(4, 4), tol) == 0);

    std::mt19937_64 rng(3);
    const Vector u = testing::random_vector(rng, 5);
    const Vector v = testing::random_vector(rng, 4);
    CHECK(rank_of(u * v.transpose(), tol) == 1);
}

TEST_CASE("image_projector") {
    Matrix expected(3, 3);
    expected << 0.5, 0.5, 0,
        0.5, 0.5, 0,
        0, 0, 1;
    CHECK((image_projector(example3_phi(), tol) - expected).norm() < 1e-12);

    std::mt19937_64 rng(5);
    const Matrix square = testing::random_matrix(rng, 4, 4);
    CHECK((image_projector(square, tol) - Matrix::Identity(4, 4)).norm() < 1e-10);
    CHECK(image_projector(Matrix::Zero(3, 3), tol).isZero(0.0));

    for (int trial = 0; trial < 50; ++trial) {
        const Index rows = 1 + static_cast<Index>(rng() % 6);
        const Index cols = 1 + static_cast<Index>(rng() % 6);
        const Index rank = static_cast<Index>(
            rng() % static_cast<std::uint64_t>(std::min(rows, cols) + 1));
        const Matrix a = testing::random_matrix_with_rank(rng, rows, cols, rank);
        const Matrix p = image_projector(a, tol);
        CHECK((p * p - p).norm() <= tol.abs_residual_tol);
        CHECK((p - p.transpose()).norm() <= tol.abs_residual_tol);
        CHECK((p * a - a).norm() <= tol.abs_residual_tol * std::max(1.0, a.norm()));
    }
}

TEST_CASE("in_image") {
    const Matrix a = diag2(1, 0);
    Vector v(2);
    v << 1, 0;
    CHECK(in_image(v, a, tol).in_image);
    v << 0, 1;
    const auto outside = in_image(v, a, tol);
    CHECK_FALSE(outside.in_image);
    CHECK(outside.residual == doctest::Approx(1.0));

    Vector wrong_size(3);
    wrong_size.setZero();
    CHECK_THROWS_AS(in_image(wrong_size, a, tol), std::invalid_argument);
}

TEST_CASE("kernel and image bases") {
    const auto kernel = kernel_basis(diag2(1, 0), tol);
    REQUIRE(kernel.dim() == 1);
    CHECK(std::abs(std::abs(kernel.basis(1, 0)) - 1.0) < 1e-14);
    CHECK(std::abs(kernel.basis(0, 0)) < 1e-14);

    // ker(Phi^T) for the three-asset characteristics: x1 + x2 = 0 and
    // x3 = 0, i.e. the line through (1, -1, 0)/sqrt(2).
    const auto phi_t_kernel = kernel_basis(Matrix(example3_phi().transpose()), tol);
    REQUIRE(phi_t_kernel.dim() == 1);
    Vector direction(3);
    direction << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0;
    const double alignment = std::abs(phi_t_kernel.basis.col(0).dot(direction));
    CHECK(alignment == doctest::Approx(1.0));

    std::mt19937_64 rng(13);
    const Matrix square = testing::random_matrix(rng, 4, 4);
    CHECK(kernel_basis(square, tol).dim() == 0);

    for (int trial = 0; trial < 50; ++trial) {
        const Index rows = 1 + static_cast<Index>(rng() % 6);
        const Index cols = 1 + static_cast<Index>(rng() % 6);
        const Index rank = static_cast<Index>(
            rng() % static_cast<std::uint64_t>(std::min(rows, cols) + 1));
        const Matrix a = testing::random_matrix_with_rank(rng, rows, cols, rank);
        const auto ker = kernel_basis(a, tol);
        CHECK(ker.dim() == cols - rank);
        CHECK((a * ker.basis).norm() <= 1e-8 * std::max(1.0, a.norm()));
        CHECK((ker.basis.transpose() * ker.basis -
               Matrix::Identity(ker.dim(), ker.dim()))
                  .norm() <= tol.abs_residual_tol);

        const auto image = image_basis(a, tol);
        CHECK(image.dim() == rank);
        const Matrix p = image_projector(a, tol);
        CHECK((p * image.basis - image.basis).norm() <= tol.abs_residual_tol);
    }
}

TEST_CASE("trivial_intersection on reference and degenerate inputs") {
    const Matrix phi = example3_phi();
    const Matrix w_t = pinv(phi, tol);
    CHECK(trivial_intersection(w_t, phi, tol));

    CHECK_FALSE(trivial_intersection(Matrix::Identity(2, 2), Matrix::Zero(2, 2), tol));

    Matrix e1(2, 1);
    e1 << 1, 0;
    CHECK_FALSE(trivial_intersection(e1, diag2(0, 1), tol));

    CHECK_THROWS_AS(trivial_intersection(Matrix::Zero(3, 2), Matrix::Zero(3, 2), tol),
                    std::invalid_argument);
}

TEST_CASE("trivial_intersection agrees with the stacked-basis oracle") {
    std::mt19937_64 rng(17);
    int nontrivial_seen = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Index n = 2 + static_cast<Index>(rng() % 5);  // ambient ≤ 6
        const Index p = 1 + static_cast<Index>(rng() % n);
        const Index rank_a =
            static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min(n, p) + 1));
        const Matrix im_a = testing::random_matrix_with_rank(rng, n, p, rank_a);
        const Index k = 1 + static_cast<Index>(rng() % 6);
        const Index rank_b =
            static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min(k, n) + 1));
        const Matrix ker_b_of = testing::random_matrix_with_rank(rng, k, n, rank_b);

        const bool expected = intersection_trivial_oracle(im_a, ker_b_of);
        CHECK(trivial_intersection(im_a, ker_b_of, tol) == expected);
        if (!expected) {
            ++nontrivial_seen;
        }
    }
    CHECK(nontrivial_seen > 10);  // the campaign exercises both outcomes
}

TEST_CASE("psd_root_of_pinv") {
    CHECK((psd_root_of_pinv(diag2(4, 0), tol) - diag2(0.5, 0)).norm() < 1e-14);
    CHECK((psd_root_of_pinv(Matrix::Identity(3, 3), tol) - Matrix::Identity(3, 3)).norm() <
          1e-14);

    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix s = testing::random_psd(rng, 3, 2);
        const Matrix u = psd_root_of_pinv(s, tol);
        CHECK((u - u.transpose()).norm() <= tol.abs_residual_tol);
        const Matrix via_pinv = pinv(s, tol);
        CHECK((u.transpose() * u - via_pinv).norm() <=
              tol.abs_residual_tol * std::max(1.0, via_pinv.norm()));
    }

    Matrix asymmetric(2, 2);
    asymmetric << 1, 1, 0, 1;
    CHECK_THROWS_AS(psd_root_of_pinv(asymmetric, tol), std::invalid_argument);
    CHECK_THROWS_AS(psd_root_of_pinv(diag2(1, -1), tol), std::invalid_argument);
}

TEST_CASE("psd_root squares back to the input") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Index rank = static_cast<Index>(rng() % 4);
        const Matrix s = testing::random_psd(rng, 3, rank);
        const Matrix u = psd_root(s, tol);
        CHECK((u * u.transpose() - s).norm() <=
              tol.abs_residual_tol * std::max(1.0, s.norm()));
    }
}

TEST_CASE("matrices_equal") {
    const Matrix a = Matrix::Identity(2, 2);
    const auto same = matrices_equal(a, a, tol);
    CHECK(same.equal);
    CHECK(same.residual == 0.0);

    const Matrix nudged = a + 1e-15 * Matrix::Ones(2, 2);
    CHECK(matrices_equal(a, nudged, tol).equal);

    const auto differs = matrices_equal(diag2(1, 1), diag2(1, 2), tol);
    CHECK_FALSE(differs.equal);
    CHECK(differs.residual == doctest::Approx(1.0));

    CHECK_THROWS_AS(matrices_equal(Matrix::Zero(2, 2), Matrix::Zero(3, 3), tol),
                    std::invalid_argument);
}

TEST_CASE("non-finite inputs are rejected") {
    Matrix bad(2, 2);
    bad << 1, 2, 3, std::nan("");
    CHECK_THROWS_AS(pinv(bad, tol), std::invalid_argument);
    CHECK_THROWS_AS(rank_of(bad, tol), std::invalid_argument);
}

TEST_CASE("Tolerance invariants") {
    CHECK_THROWS_AS(Tolerance(0.0, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(Tolerance(1.5, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(Tolerance(1e-10, 0.0), std::invalid_argument);
}
