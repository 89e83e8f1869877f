#include "koopkit/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace koop {

void ensure_finite(const Eigen::Ref<const RealMatrix>& m, const char* context) {
    if (!m.allFinite())
        throw ValidationError(std::string(context) + ": non-finite entries");
}

void ensure_finite(const Eigen::Ref<const ComplexMatrix>& m, const char* context) {
    if (!m.allFinite())
        throw ValidationError(std::string(context) + ": non-finite entries");
}

SvdResult svd(const RealMatrix& m) {
    if (m.size() == 0) throw ShapeError("svd: empty matrix");
    ensure_finite(m, "svd");
    Eigen::JacobiSVD<RealMatrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success)
        throw NumericError("svd: iteration did not converge");
    return {solver.matrixU(), solver.singularValues(),
            RealMatrix(solver.matrixV().transpose())};
}

RealMatrix pinv(const RealMatrix& m, double rtol) {
    if (m.size() == 0) throw ShapeError("pinv: empty matrix");
    if (rtol < 0.0)
        rtol = static_cast<double>(std::max(m.rows(), m.cols())) *
               std::numeric_limits<double>::epsilon();
    const SvdResult s = svd(m);
    const double smax = s.singular_values.size() ? s.singular_values(0) : 0.0;
    const double cutoff = rtol * smax;
    RealVector inv = RealVector::Zero(s.singular_values.size());
    for (Index i = 0; i < s.singular_values.size(); ++i)
        if (s.singular_values(i) > cutoff) inv(i) = 1.0 / s.singular_values(i);
    return s.Vt.transpose() * inv.asDiagonal() * s.U.transpose();
}

RealMatrix pinv_truncated(const RealMatrix& m, Index rank) {
    if (rank < 1) throw ValidationError("pinv_truncated: rank must be >= 1");
    const SvdResult s = svd(m);
    const Index r = std::min(rank, s.singular_values.size());
    RealVector inv = RealVector::Zero(s.singular_values.size());
    for (Index i = 0; i < r; ++i)
        if (s.singular_values(i) > 0.0) inv(i) = 1.0 / s.singular_values(i);
    return s.Vt.transpose() * inv.asDiagonal() * s.U.transpose();
}

namespace {

// Rotates v so its first entry of significant magnitude is real positive,
// after normalizing to unit length.
void canonicalize_vector(Eigen::Ref<ComplexVector> v) {
    const double nrm = v.norm();
    if (nrm == 0.0) return;
    v /= nrm;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
            v *= std::conj(v(i)) / std::abs(v(i));
            return;
        }
    }
}

std::vector<Index> eigen_order(const ComplexVector& vals) {
    std::vector<Index> idx(static_cast<size_t>(vals.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
        const double ma = std::abs(vals(a)), mb = std::abs(vals(b));
        if (std::abs(ma - mb) > 1e-14 * std::max({ma, mb, 1.0})) return ma > mb;
        const double ra = vals(a).real(), rb = vals(b).real();
        if (std::abs(ra - rb) > 1e-14 * std::max({std::abs(ra), std::abs(rb), 1.0}))
            return ra > rb;
        return vals(a).imag() < vals(b).imag();
    });
    return idx;
}

}  // namespace

EigenDecomposition eig(const RealMatrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("eig: matrix must be square");
    ensure_finite(m, "eig");
    const Index n = m.rows();

    Eigen::EigenSolver<RealMatrix> solver(m, true);
    if (solver.info() != Eigen::Success)
        throw NumericError("eig: QR iteration did not converge");

    const ComplexVector raw_vals = solver.eigenvalues();
    const ComplexMatrix raw_vecs = solver.eigenvectors();

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.right_vectors.resize(n, n);
    const auto order = eigen_order(raw_vals);
    for (Index j = 0; j < n; ++j) {
        out.eigenvalues(j) = raw_vals(order[static_cast<size_t>(j)]);
        out.right_vectors.col(j) = raw_vecs.col(order[static_cast<size_t>(j)]);
        canonicalize_vector(out.right_vectors.col(j));
    }

    // Left vectors: W = V^{-H} gives exact biorthonormality when V is well
    // conditioned; near-defective matrices fall back to the transposed
    // problem and the measured residual_bound reports the defect.
    const Eigen::JacobiSVD<ComplexMatrix> vsvd(out.right_vectors);
    const double smin = vsvd.singularValues()(n - 1);
    const double smax = vsvd.singularValues()(0);
    if (smin > 1e-13 * smax) {
        out.left_vectors =
            out.right_vectors.inverse().adjoint();
    } else {
        Eigen::EigenSolver<RealMatrix> tsolver(RealMatrix(m.transpose()), true);
        if (tsolver.info() != Eigen::Success)
            throw NumericError("eig: QR iteration did not converge (transpose)");
        const ComplexVector tvals = tsolver.eigenvalues();
        const ComplexMatrix tvecs = tsolver.eigenvectors();
        out.left_vectors.resize(n, n);
        std::vector<bool> used(static_cast<size_t>(n), false);
        for (Index j = 0; j < n; ++j) {
            // match by eigenvalue proximity
            Index best = -1;
            double bestd = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < n; ++i) {
                if (used[static_cast<size_t>(i)]) continue;
                const double d = std::abs(tvals(i) - out.eigenvalues(j));
                if (d < bestd) { bestd = d; best = i; }
            }
            used[static_cast<size_t>(best)] = true;
            out.left_vectors.col(j) = tvecs.col(best).conjugate();
            canonicalize_vector(out.left_vectors.col(j));
            // biorthonormal scaling where the pairing is not degenerate
            const std::complex<double> c =
                out.left_vectors.col(j).dot(out.right_vectors.col(j));
            if (std::abs(c) > 1e-8) out.left_vectors.col(j) /= std::conj(c);
        }
    }

    const double mnorm = std::max(m.norm(), 1e-300);
    double resid = 0.0;
    for (Index j = 0; j < n; ++j) {
        resid = std::max(resid,
                         (m * out.right_vectors.col(j) -
                          out.eigenvalues(j) * out.right_vectors.col(j)).norm() /
                             out.right_vectors.col(j).norm());
        resid = std::max(resid,
                         (out.left_vectors.col(j).adjoint() * m -
                          out.eigenvalues(j) * out.left_vectors.col(j).adjoint())
                                 .norm() /
                             out.left_vectors.col(j).norm());
    }
    out.residual_bound = resid / mnorm;

    // with a fully distinct spectrum the biorthogonality defect is part of
    // the documented residual
    double min_gap = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            min_gap = std::min(min_gap, std::abs(out.eigenvalues(i) - out.eigenvalues(j)));
    if (n < 2 || min_gap > 1e-8 * mnorm) {
        const ComplexMatrix gram =
            out.left_vectors.adjoint() * out.right_vectors -
            ComplexMatrix::Identity(n, n);
        out.residual_bound = std::max(out.residual_bound,
                                      gram.cwiseAbs().maxCoeff() / mnorm);
    }
    return out;
}

RealMatrix expm(const RealMatrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("expm: matrix must be square");
    ensure_finite(m, "expm");
    RealMatrix e = m.exp();
    if (!e.allFinite()) throw NumericError("expm: overflow");
    return e;
}

ComplexMatrix expm(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("expm: matrix must be square");
    ensure_finite(m, "expm");
    ComplexMatrix e = m.exp();
    if (!e.allFinite()) throw NumericError("expm: overflow");
    return e;
}

ComplexMatrix matrix_power(const ComplexMatrix& m, int k) {
    if (m.rows() != m.cols()) throw ShapeError("matrix_power: matrix must be square");
    if (k < 0) throw ValidationError("matrix_power: negative power");
    ComplexMatrix acc = ComplexMatrix::Identity(m.rows(), m.cols());
    for (int i = 0; i < k; ++i) acc = acc * m;
    return acc;
}

ComplexMatrix solve_discrete_lyapunov(const ComplexMatrix& transition,
                                      const ComplexMatrix& q) {
    const Index n = transition.rows();
    if (transition.cols() != n) throw ShapeError("lyapunov: transition not square");
    if (q.rows() != n || q.cols() != n) throw ShapeError("lyapunov: Q shape mismatch");
    ensure_finite(transition, "lyapunov");
    ensure_finite(q, "lyapunov");

    Eigen::ComplexEigenSolver<ComplexMatrix> es(transition, false);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    if (rho >= 1.0)
        throw InstabilityError("lyapunov: spectral radius " + std::to_string(rho) +
                               " >= 1, certificate impossible");

    // (I - T^T kron T^H) vec(P) = vec(Q), column-major vec.
    const ComplexMatrix tt = transition.transpose();
    const ComplexMatrix th = transition.adjoint();
    ComplexMatrix system = ComplexMatrix::Identity(n * n, n * n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            system.block(i * n, j * n, n, n) -= tt(i, j) * th;

    ComplexVector rhs(n * n);
    for (Index c = 0; c < n; ++c) rhs.segment(c * n, n) = q.col(c);

    const ComplexVector sol = system.partialPivLu().solve(rhs);
    ComplexMatrix p(n, n);
    for (Index c = 0; c < n; ++c) p.col(c) = sol.segment(c * n, n);
    p = 0.5 * (p + p.adjoint().eval());  // enforce Hermitian symmetry
    if (!p.allFinite()) throw NumericError("lyapunov: singular vectorized system");
    return p;
}

RealMatrix lstsq(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows())
        throw ShapeError("lstsq: row counts differ");
    return pinv(a) * b;
}

}  // namespace koop
