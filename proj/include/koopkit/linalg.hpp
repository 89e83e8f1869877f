#pragma once

#include <Eigen/Dense>
#include <complex>

#include "koopkit/errors.hpp"

namespace koop {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Throws ValidationError if any entry of m is NaN/Inf. Used at construction
/// boundaries (data ingestion, model load, fit inputs).
void ensure_finite(const Eigen::Ref<const RealMatrix>& m, const char* context);
void ensure_finite(const Eigen::Ref<const ComplexMatrix>& m, const char* context);

struct SvdResult {
    RealMatrix U;                 // left singular vectors (columns)
    RealVector singular_values;   // non-increasing, non-negative
    RealMatrix Vt;                // right singular vectors, transposed
};

/// Thin SVD, M = U * diag(singular_values) * Vt.
SvdResult svd(const RealMatrix& m);

/// Moore-Penrose pseudo-inverse. Singular values <= rtol * sigma_max are
/// treated as zero; rtol < 0 selects the default max(rows, cols) * eps.
RealMatrix pinv(const RealMatrix& m, double rtol = -1.0);

/// Pseudo-inverse restricted to the top `rank` singular directions.
RealMatrix pinv_truncated(const RealMatrix& m, Index rank);

/// Eigendecomposition of a real square matrix with left and right vectors.
///
/// Ordering: descending modulus, ties by descending real part then ascending
/// imaginary part, which keeps conjugate pairs adjacent. Right vectors have
/// unit norm with their first nonzero entry rotated real-positive. Left
/// vectors are scaled for biorthonormality w_i^H v_j = delta_ij whenever the
/// eigenvector matrix is invertible; otherwise they come from the transposed
/// problem and residual_bound documents the defect.
struct EigenDecomposition {
    ComplexVector eigenvalues;
    ComplexMatrix right_vectors;  // columns v_j, A v_j = lambda_j v_j
    ComplexMatrix left_vectors;   // columns w_j, w_j^H A = lambda_j w_j^H
    double residual_bound;        // measured: max residual / ||A||
};

EigenDecomposition eig(const RealMatrix& m);

/// Matrix exponential (scaling-and-squaring Pade).
RealMatrix expm(const RealMatrix& m);
ComplexMatrix expm(const ComplexMatrix& m);

/// k-th matrix power by repeated multiplication (k >= 0).
ComplexMatrix matrix_power(const ComplexMatrix& m, int k);

/// Solves T^H P T - P + Q = 0 for Hermitian P via the vectorized linear
/// system (I - T^T kron T^H) vec(P) = vec(Q). Requires spectral radius of T
/// below one, otherwise throws InstabilityError.
ComplexMatrix solve_discrete_lyapunov(const ComplexMatrix& transition,
                                      const ComplexMatrix& q);

/// Minimizer X of ||A X - B||_F computed as pinv(A) * B.
RealMatrix lstsq(const RealMatrix& a, const RealMatrix& b);

}  // namespace koop
