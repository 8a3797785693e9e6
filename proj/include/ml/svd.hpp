#pragma once

#include "ml/matrix.hpp"

namespace ml {

struct SvdResult {
    Matrix u;         // m x r, orthonormal columns
    Vector sigma;     // r singular values, descending
    Matrix v;         // n x r, orthonormal columns
};

/// Thin SVD by one-sided Jacobi rotations, r = min(m, n).
SvdResult svd(const Matrix& a);

/// Moore-Penrose pseudoinverse. Singular values below 1e-12 times the largest
/// are treated as zero.
Matrix pseudoinverse(const Matrix& m);

struct EigResult {
    Vector values;    // descending
    Matrix vectors;   // column i pairs with values[i]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
EigResult eig_sym(const Matrix& a);

/// Cholesky factor L (lower) of an SPD matrix; throws if not SPD.
Matrix cholesky(const Matrix& a);

/// Solves L L^T x = b given the Cholesky factor.
Vector cholesky_solve(const Matrix& l, const Vector& b);

}  // namespace ml
