#include "clfm/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace clfm {

void require_finite(const Matrix& a, const std::string& name) {
    if (!a.allFinite()) {
        throw std::invalid_argument(name + " contains non-finite entries");
    }
}

void require_finite(const Vector& v, const std::string& name) {
    if (!v.allFinite()) {
        throw std::invalid_argument(name + " contains non-finite entries");
    }
}

}  // namespace clfm

namespace clfm::linalg {

namespace {

// Full SVD with the library-wide rank cutoff applied once.
struct RankedSvd {
    Matrix u;       // rows x rows
    Matrix v;       // cols x cols
    Vector sigma;   // min(rows, cols), descending
    Index rank = 0;

    RankedSvd(const Matrix& a, const Tolerance& tol) {
        if (a.rows() == 0 || a.cols() == 0) {
            // Eigen's SVD does not accept empty matrices; the factors of an
            // empty matrix are identities and the rank is zero.
            u = Matrix::Identity(a.rows(), a.rows());
            v = Matrix::Identity(a.cols(), a.cols());
            sigma = Vector(0);
            return;
        }
        Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
        u = svd.matrixU();
        v = svd.matrixV();
        sigma = svd.singularValues();
        const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
        const double cutoff = tol.rel_rank_tol * sigma_max;
        for (Index i = 0; i < sigma.size(); ++i) {
            if (sigma(i) > cutoff && sigma(i) > 0.0) {
                ++rank;
            }
        }
    }
};

// Eigendecomposition of a symmetric PSD input with the shared clipping policy:
// asymmetry beyond tolerance or eigenvalues below -abs_residual_tol are
// rejected, eigenvalues in [-abs_residual_tol, 0) are clipped to zero.
struct PsdEigen {
    Matrix q;          // orthonormal eigenvectors
    Vector lambda;     // clipped eigenvalues, ascending
    double lambda_max = 0.0;

    PsdEigen(const Matrix& s, const Tolerance& tol, const char* what) {
        if (s.rows() != s.cols()) {
            throw std::invalid_argument(std::string(what) + ": input must be square");
        }
        require_finite(s, what);
        const double asym = (s - s.transpose()).norm();
        if (asym > tol.abs_residual_tol * std::max(1.0, s.norm())) {
            throw std::invalid_argument(std::string(what) + ": input is materially non-symmetric");
        }
        const Matrix sym = 0.5 * (s + s.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
        if (es.info() != Eigen::Success) {
            throw std::runtime_error(std::string(what) + ": eigendecomposition failed");
        }
        q = es.eigenvectors();
        lambda = es.eigenvalues();
        for (Index i = 0; i < lambda.size(); ++i) {
            if (lambda(i) < -tol.abs_residual_tol) {
                throw std::invalid_argument(std::string(what) + ": input is not positive semidefinite");
            }
            if (lambda(i) < 0.0) {
                lambda(i) = 0.0;
            }
        }
        lambda_max = lambda.size() > 0 ? lambda(lambda.size() - 1) : 0.0;
    }

    bool retained(Index i, const Tolerance& tol) const {
        return lambda(i) > tol.rel_rank_tol * lambda_max && lambda(i) > 0.0;
    }
};

}  // namespace

Matrix pinv(const Matrix& a, const Tolerance& tol) {
    require_finite(a, "pinv input");
    RankedSvd svd(a, tol);
    Matrix result = Matrix::Zero(a.cols(), a.rows());
    for (Index i = 0; i < svd.rank; ++i) {
        result.noalias() += (1.0 / svd.sigma(i)) * svd.v.col(i) * svd.u.col(i).transpose();
    }
    return result;
}

Index rank_of(const Matrix& a, const Tolerance& tol) {
    require_finite(a, "rank_of input");
    return RankedSvd(a, tol).rank;
}

Matrix image_projector(const Matrix& a, const Tolerance& tol) {
    require_finite(a, "image_projector input");
    RankedSvd svd(a, tol);
    const Matrix u_r = svd.u.leftCols(svd.rank);
    return u_r * u_r.transpose();
}

MembershipCheck in_image(const Vector& v, const Matrix& a, const Tolerance& tol) {
    if (v.size() != a.rows()) {
        throw std::invalid_argument("in_image: vector length does not match matrix rows");
    }
    require_finite(v, "in_image vector");
    const Matrix p = image_projector(a, tol);
    MembershipCheck check;
    check.residual = (p * v - v).norm();
    check.in_image = check.residual <= tol.abs_residual_tol * std::max(1.0, v.norm());
    return check;
}

SubspaceBasis kernel_basis(const Matrix& a, const Tolerance& tol) {
    require_finite(a, "kernel_basis input");
    RankedSvd svd(a, tol);
    SubspaceBasis out;
    out.ambient_dim = a.cols();
    out.basis = svd.v.rightCols(a.cols() - svd.rank);
    return out;
}

SubspaceBasis image_basis(const Matrix& a, const Tolerance& tol) {
    require_finite(a, "image_basis input");
    RankedSvd svd(a, tol);
    SubspaceBasis out;
    out.ambient_dim = a.rows();
    out.basis = svd.u.leftCols(svd.rank);
    return out;
}

bool trivial_intersection(const Matrix& im_a, const Matrix& ker_b_of, const Tolerance& tol) {
    if (ker_b_of.cols() != im_a.rows()) {
        throw std::invalid_argument("trivial_intersection: ambient dimensions do not match");
    }
    // dim(B(Im A)) = rank(A) - dim(Im A ∩ ker B), so the intersection is
    // trivial exactly when multiplying by B preserves the rank of A.
    return rank_of(ker_b_of * im_a, tol) == rank_of(im_a, tol);
}

Matrix psd_root_of_pinv(const Matrix& s, const Tolerance& tol) {
    PsdEigen eig(s, tol, "psd_root_of_pinv");
    Vector d = Vector::Zero(eig.lambda.size());
    for (Index i = 0; i < d.size(); ++i) {
        if (eig.retained(i, tol)) {
            d(i) = 1.0 / std::sqrt(eig.lambda(i));
        }
    }
    return eig.q * d.asDiagonal() * eig.q.transpose();
}

Matrix psd_root(const Matrix& s, const Tolerance& tol) {
    PsdEigen eig(s, tol, "psd_root");
    Vector d = Vector::Zero(eig.lambda.size());
    for (Index i = 0; i < d.size(); ++i) {
        if (eig.retained(i, tol)) {
            d(i) = std::sqrt(eig.lambda(i));
        }
    }
    return eig.q * d.asDiagonal() * eig.q.transpose();
}

EqualityCheck matrices_equal(const Matrix& a, const Matrix& b, const Tolerance& tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("matrices_equal: shape mismatch");
    }
    EqualityCheck check;
    check.residual = (a - b).norm();
    check.equal = check.residual <= tol.abs_residual_tol * std::max({1.0, a.norm(), b.norm()});
    return check;
}

}  // namespace clfm::linalg
