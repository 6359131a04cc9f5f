#pragma once

#include "clfm/types.hpp"

namespace clfm::linalg {

/// Orthonormal basis of a subspace of R^ambient_dim, one column per direction.
/// A zero-column basis represents the trivial subspace {0}.
struct SubspaceBasis {
    Matrix basis;
    Index ambient_dim = 0;

    Index dim() const { return basis.cols(); }
};

/// Result of a subspace-membership test. `residual` is the absolute distance
/// ||A A^+ v - v||_2; the boolean applies the relative threshold
/// abs_residual_tol * max(1, ||v||_2).
struct MembershipCheck {
    bool in_image = false;
    double residual = 0.0;
};

/// Result of a matrix-equality test. `residual` is the absolute Frobenius
/// distance ||A - B||_F; the boolean applies the relative threshold
/// abs_residual_tol * max(1, ||A||_F, ||B||_F).
struct EqualityCheck {
    bool equal = false;
    double residual = 0.0;
};

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// rel_rank_tol * sigma_max are zeroed; the zero matrix maps to the zero
/// matrix of transposed shape.
Matrix pinv(const Matrix& a, const Tolerance& tol);

/// Numerical rank: the number of singular values above rel_rank_tol * sigma_max.
Index rank_of(const Matrix& a, const Tolerance& tol);

/// Orthogonal projector A A^+ onto the image of A.
Matrix image_projector(const Matrix& a, const Tolerance& tol);

/// Tests v ∈ Im(A) through the image projector.
MembershipCheck in_image(const Vector& v, const Matrix& a, const Tolerance& tol);

/// Orthonormal basis of ker(A) (right null space); ambient dimension = cols(A).
SubspaceBasis kernel_basis(const Matrix& a, const Tolerance& tol);

/// Orthonormal basis of Im(A); ambient dimension = rows(A).
SubspaceBasis image_basis(const Matrix& a, const Tolerance& tol);

/// True iff Im(im_a) ∩ ker(ker_b_of) = {0}, decided through the rank identity
/// rank(ker_b_of * im_a) = rank(im_a).
bool trivial_intersection(const Matrix& im_a, const Matrix& ker_b_of, const Tolerance& tol);

/// Symmetric matrix U with U^T U = S^+ for symmetric PSD S, built from the
/// eigendecomposition with reciprocal square roots of the retained
/// eigenvalues. Inputs with asymmetry residual above tolerance, or with an
/// eigenvalue below -abs_residual_tol, are rejected; eigenvalues in
/// [-abs_residual_tol, 0) are clipped to zero.
Matrix psd_root_of_pinv(const Matrix& s, const Tolerance& tol);

/// Symmetric PSD square root: U with U U^T = S. Same input policy as
/// psd_root_of_pinv.
Matrix psd_root(const Matrix& s, const Tolerance& tol);

/// Frobenius-norm equality test with relative threshold.
EqualityCheck matrices_equal(const Matrix& a, const Matrix& b, const Tolerance& tol);

}  // namespace clfm::linalg
