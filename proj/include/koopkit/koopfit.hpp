#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koopkit/embed.hpp"

namespace koop {

enum class TimeKind { Discrete, Continuous };

/// Vector-valued output observable y = h(x) with its dimension.
struct OutputMap {
    std::function<RealVector(const RealVector&)> fn;
    Index dim;
};

/// Lifted linear model: z = psi(x), z+ = A z (or z' = A z for the generator
/// kind), y = C z.
struct KoopmanModel {
    Dictionary dictionary;
    RealMatrix A;  // D x D transition (discrete) or generator (continuous)
    RealMatrix C;  // m x D output projection
    TimeKind sampling = TimeKind::Discrete;
    double ts = 0.0;  // sampling time; required for continuous prediction
    double linearity_residual = 0.0;      // ||psi(X+) - A psi(X)||_F at fit
    double reconstruction_residual = 0.0; // ||Y - C psi(X)||_F at fit
    std::vector<std::string> warnings;

    Index lifted_dim() const { return A.rows(); }
    Index output_dim() const { return C.rows(); }
};

/// Spectral form: phi(x) = W psi(x), phi+ = transition phi, y = V phi.
/// The transition is diagonal for comfortably diagonalizable models and
/// upper block-triangular (Schur form) when the eigenvector matrix is too
/// ill conditioned, which keeps generalized-eigenfunction chains intact.
struct SpectralModel {
    ComplexMatrix transition;          // D x D, diagonal or triangular
    bool diagonal = true;
    ComplexMatrix eigenfunction_coeffs;  // W, rows w_j^H
    ComplexMatrix modes;                 // V, m x D
    Dictionary dictionary;
    TimeKind time_kind = TimeKind::Discrete;
    double ts = 0.0;

    ComplexVector eigenvalues() const { return transition.diagonal(); }
    ComplexVector eigenfunctions(const RealVector& x) const;
    Index lifted_dim() const { return transition.rows(); }
    Index output_dim() const { return modes.rows(); }
};

/// Sparse complex polynomial over monomial exponent vectors; carried by
/// eigenpairs with polynomial structure so they stay serializable and
/// closed under products.
struct ComplexPolynomial {
    Index n = 0;
    std::map<std::vector<int>, std::complex<double>> terms;

    std::complex<double> eval(const RealVector& x) const;
    ComplexPolynomial operator*(const ComplexPolynomial& other) const;
    ComplexPolynomial pow(int k) const;
};

enum class Provenance { Principle, Product, Fitted };

struct Eigenpair {
    std::complex<double> value;
    std::function<std::complex<double>(const RealVector&)> function;
    Provenance provenance = Provenance::Fitted;
    std::vector<int> multi_index;  // exponents over the principle set
    std::string label;
    std::optional<ComplexPolynomial> polynomial;
};

struct EigenpairSet {
    std::vector<Eigenpair> pairs;
    TimeKind time_kind = TimeKind::Discrete;
};

/// Residual w of the near-identity conjugacy d(x) = x + w(x); the basis holds
/// only terms of degree >= 2 so that w(0) = 0 and dw/dx(0) = 0.
struct ConjugacyMap {
    Dictionary basis;
    RealMatrix coefficients;  // n x D, w(x) = coefficients * basis(x)
    RealMatrix linear_part;   // F'(0) or T

    RealVector residual(const RealVector& x) const;       // w(x)
    RealVector diffeomorphism(const RealVector& x) const; // d(x) = x + w(x)
};

struct ConjugacyFit {
    ConjugacyMap map;
    EigenpairSet eigenpairs;  // principle pairs (lambda_j, <u_j, d(x)>)
    double fit_residual = 0.0;  // max sample residual of the functional equation
    bool poor_fit = false;
    std::vector<std::string> warnings;
};

/// Vanilla DMD: A = Xplus X^+, identity dictionary and output. A rank cap
/// truncates the pseudo-inverse to the top singular directions.
KoopmanModel fit_dmd(const SnapshotPair& pairs,
                     std::optional<Index> rank = std::nullopt);

/// EDMD with linear reconstruction: A minimizes ||psi(X+) - A psi(X)||_F and
/// C minimizes ||Y - C psi(X)||_F, both in closed form. Outputs default to
/// the state itself. Too few snapshots is recorded as a model warning.
KoopmanModel fit_edmd(const SnapshotPair& pairs, const Dictionary& dictionary,
                      std::optional<OutputMap> outputs = std::nullopt);
KoopmanModel fit_edmd(std::span<const Trajectory> trajs, const Dictionary& dictionary,
                      std::optional<OutputMap> outputs = std::nullopt);

/// Generator EDMD: G minimizes ||J_psi(x) xdot - G psi(x)||_F over samples
/// (columns of states/derivatives). Returns a continuous-kind model.
KoopmanModel fit_generator_edmd(const RealMatrix& states,
                                const RealMatrix& derivatives,
                                const Dictionary& dictionary,
                                std::optional<OutputMap> outputs = std::nullopt);

/// Eigendecomposes A: eigenfunction coefficients from left eigenvectors,
/// modes from C times right eigenvectors. Falls back to a complex Schur
/// (block-triangular) transition when the eigenvector matrix condition
/// number exceeds 1e8.
SpectralModel extract_spectrum(const KoopmanModel& model);

/// y_j = C A^j psi(x0), j = 0..k (discrete) or y(j ts) = C expm(A j ts) psi(x0)
/// (continuous, requires ts > 0). Rows of the result are steps.
RealMatrix predict(const KoopmanModel& model, const RealVector& x0, int k);

/// Spectral form: y_j = Re(V transition^j W psi(x0)); triangular transitions
/// propagate through matrix powers.
RealMatrix predict(const SpectralModel& model, const RealVector& x0, int k);

struct ConjugacyOptions {
    double residual_tol = 1e-8;  // above this the fit is flagged poor
};

/// Discrete conjugacy learning: solves the linear least-squares problem for
/// w in  w(F(x)) = A w(x) - e(x), e(x) = F(x) - A x  over the samples
/// (columns). Principle eigenpairs are (lambda_j, <u_j, d(x)>) with u_j the
/// adjoint eigenvectors of the linear part.
ConjugacyFit fit_conjugacy(const DiscreteMap& map, const RealMatrix& linear_part,
                           const Dictionary& basis, const RealMatrix& samples,
                           const ConjugacyOptions& opts = {});

/// Continuous counterpart: minimizes ||J_d(x) f(x) - T d(x)|| with
/// d(x) = x + w(x).
ConjugacyFit fit_conjugacy(const VectorField& field, const RealMatrix& linear_part,
                           const Dictionary& basis, const RealMatrix& samples,
                           const ConjugacyOptions& opts = {});

/// All products of the principle pairs with multi-index total degree in
/// [1, max_total_degree]. Discrete eigenvalues multiply; continuous ones add
/// (generator algebra). Unit multi-indices return the inputs unchanged.
EigenpairSet eigenpair_products(const EigenpairSet& principles,
                                int max_total_degree);

/// DMD on consecutive columns of the depth-L Hankel matrix of the series.
KoopmanModel hankel_dmd(const RealVector& series, Index depth,
                        std::optional<Index> rank = std::nullopt);

/// Assembles a spectral model from eigenpairs that carry polynomial
/// structure: the dictionary becomes the union of their monomials, W holds
/// the coefficients, and the modes are fitted by least squares so that
/// V phi(x) reconstructs the outputs on the given sample states (columns).
SpectralModel spectral_from_eigenpairs(const EigenpairSet& pairs,
                                       const RealMatrix& state_samples,
                                       std::optional<OutputMap> outputs = std::nullopt,
                                       double ts = 0.0);

}  // namespace koop
