#pragma once

#include <optional>

#include "koopkit/koopfit.hpp"

namespace koop {

enum class Verdict { Stable, Marginal, Unstable };

/// Per-eigenvalue stability verdicts. The margin is the squared-modulus
/// distance to the marginal band, (1 - tol)^2 - rho(transition)^2, for
/// discrete models and -tol - max Re(s) for continuous ones; it is positive
/// exactly when the overall verdict is stable.
struct StabilityReport {
    std::vector<Verdict> per_eigenvalue;
    Verdict overall;
    double margin;
    TimeKind time_kind;
};

StabilityReport classify_stability(const SpectralModel& spec, double tol = 1e-9);

/// Witness record for the decrement identity
/// V(F(x)) - V(x) + ||phi(x)||^2 = 0.
struct DecrementReport {
    double max_abs_deviation;
    Index samples_checked;
};

/// Quadratic certificate V(x) = phi(x)^H P phi(x) with transition^H P
/// transition - P + I = 0, so V decreases by ||phi(x)||^2 along each step.
class LyapunovCertificate {
public:
    LyapunovCertificate(ComplexMatrix p, ComplexMatrix eigenfunction_coeffs,
                        Dictionary dictionary);

    const ComplexMatrix& P() const { return p_; }
    double value(const RealVector& x) const;
    ComplexVector eigenfunctions(const RealVector& x) const;
    const std::optional<DecrementReport>& decrement_witness() const {
        return witness_;
    }

private:
    friend LyapunovCertificate synthesize_lyapunov(const SpectralModel&,
                                                   const DiscreteMap&,
                                                   const RealMatrix&);
    ComplexMatrix p_;
    ComplexMatrix coeffs_;
    Dictionary dictionary_;
    std::optional<DecrementReport> witness_;
};

LyapunovCertificate synthesize_lyapunov(const SpectralModel& spec);

/// Variant that evaluates the decrement identity on the witness samples
/// (columns) and records the result on the certificate.
LyapunovCertificate synthesize_lyapunov(const SpectralModel& spec,
                                        const DiscreteMap& map,
                                        const RealMatrix& witness_samples);

DecrementReport check_decrement(const LyapunovCertificate& cert,
                                const DiscreteMap& map, const RealMatrix& samples);

/// Candidate Lyapunov function (sum_i |phi_i(x)|^p)^(1/p).
std::function<double(const RealVector&)> pnorm_candidate(
    std::vector<std::function<std::complex<double>(const RealVector&)>> eigenfunctions,
    int p);

struct InvarianceReport {
    double max_violation;
    Index samples_on_set;
    bool pass;
    double tol;
};

/// Verifies |phi(F(x))| <= tol for every sample with |phi(x)| <= tol.
InvarianceReport check_zero_levelset_invariance(const Eigenpair& pair,
                                                const DiscreteMap& map,
                                                const RealMatrix& samples,
                                                double tol = 1e-12);

/// Indices of eigenfunctions with eigenvalue 1 (discrete) or 0 (continuous)
/// within tol; constant eigenfunctions are flagged separately, not returned.
struct ConservedReport {
    std::vector<Index> conserved;
    std::vector<Index> trivial_constant;
};

ConservedReport find_conserved(const SpectralModel& spec, double tol = 1e-9);

}  // namespace koop
