#include "koopkit/analysis.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace koop {

StabilityReport classify_stability(const SpectralModel& spec, double tol) {
    const ComplexVector vals = spec.eigenvalues();
    StabilityReport report;
    report.time_kind = spec.time_kind;
    report.overall = Verdict::Stable;

    if (spec.time_kind == TimeKind::Discrete) {
        double rho = 0.0;
        for (Index j = 0; j < vals.size(); ++j) {
            const double m = std::abs(vals(j));
            rho = std::max(rho, m);
            Verdict v = Verdict::Stable;
            if (std::abs(m - 1.0) <= tol)
                v = Verdict::Marginal;
            else if (m > 1.0)
                v = Verdict::Unstable;
            report.per_eigenvalue.push_back(v);
        }
        report.margin = (1.0 - tol) * (1.0 - tol) - rho * rho;
    } else {
        double max_re = -std::numeric_limits<double>::infinity();
        for (Index j = 0; j < vals.size(); ++j) {
            const double re = vals(j).real();
            max_re = std::max(max_re, re);
            Verdict v = Verdict::Stable;
            if (std::abs(re) <= tol)
                v = Verdict::Marginal;
            else if (re > 0.0)
                v = Verdict::Unstable;
            report.per_eigenvalue.push_back(v);
        }
        report.margin = -tol - max_re;
    }
    for (const Verdict v : report.per_eigenvalue)
        if (v != Verdict::Stable) {
            report.overall = (v == Verdict::Unstable || report.overall == Verdict::Unstable)
                                 ? Verdict::Unstable
                                 : Verdict::Marginal;
        }
    return report;
}

LyapunovCertificate::LyapunovCertificate(ComplexMatrix p,
                                         ComplexMatrix eigenfunction_coeffs,
                                         Dictionary dictionary)
    : p_(std::move(p)), coeffs_(std::move(eigenfunction_coeffs)),
      dictionary_(std::move(dictionary)) {}

ComplexVector LyapunovCertificate::eigenfunctions(const RealVector& x) const {
    return coeffs_ * dictionary_.eval(x).cast<std::complex<double>>();
}

double LyapunovCertificate::value(const RealVector& x) const {
    const ComplexVector phi = eigenfunctions(x);
    return (phi.adjoint() * p_ * phi)(0).real();
}

LyapunovCertificate synthesize_lyapunov(const SpectralModel& spec) {
    if (spec.time_kind != TimeKind::Discrete)
        throw ValidationError("synthesize_lyapunov: discrete-time models only");
    const Index d = spec.lifted_dim();
    const ComplexMatrix p = solve_discrete_lyapunov(
        spec.transition, ComplexMatrix::Identity(d, d));
    return LyapunovCertificate(p, spec.eigenfunction_coeffs, spec.dictionary);
}

LyapunovCertificate synthesize_lyapunov(const SpectralModel& spec,
                                        const DiscreteMap& map,
                                        const RealMatrix& witness_samples) {
    LyapunovCertificate cert = synthesize_lyapunov(spec);
    cert.witness_ = check_decrement(cert, map, witness_samples);
    return cert;
}

DecrementReport check_decrement(const LyapunovCertificate& cert,
                                const DiscreteMap& map, const RealMatrix& samples) {
    double worst = 0.0;
    for (Index c = 0; c < samples.cols(); ++c) {
        const RealVector x = samples.col(c);
        const double dev = cert.value(map.step(x)) - cert.value(x) +
                           cert.eigenfunctions(x).squaredNorm();
        worst = std::max(worst, std::abs(dev));
    }
    return {worst, samples.cols()};
}

std::function<double(const RealVector&)> pnorm_candidate(
    std::vector<std::function<std::complex<double>(const RealVector&)>> eigenfunctions,
    int p) {
    if (p < 1) throw ValidationError("pnorm_candidate: p must be >= 1");
    if (eigenfunctions.empty())
        throw ValidationError("pnorm_candidate: needs at least one eigenfunction");
    auto fns = std::make_shared<const decltype(eigenfunctions)>(std::move(eigenfunctions));
    const double pd = static_cast<double>(p);
    return [fns, pd](const RealVector& x) {
        double acc = 0.0;
        for (const auto& f : *fns) acc += std::pow(std::abs(f(x)), pd);
        return std::pow(acc, 1.0 / pd);
    };
}

InvarianceReport check_zero_levelset_invariance(const Eigenpair& pair,
                                                const DiscreteMap& map,
                                                const RealMatrix& samples,
                                                double tol) {
    InvarianceReport report{0.0, 0, true, tol};
    for (Index c = 0; c < samples.cols(); ++c) {
        const RealVector x = samples.col(c);
        if (std::abs(pair.function(x)) > tol) continue;  // not on the level set
        ++report.samples_on_set;
        report.max_violation =
            std::max(report.max_violation, std::abs(pair.function(map.step(x))));
    }
    report.pass = report.max_violation <= tol;
    return report;
}

ConservedReport find_conserved(const SpectralModel& spec, double tol) {
    ConservedReport report;
    const ComplexVector vals = spec.eigenvalues();

    // identify constant dictionary coordinates numerically
    std::vector<bool> coordinate_constant(static_cast<size_t>(spec.dictionary.output_dim()), true);
    const RealVector probe_base = RealVector::Constant(spec.dictionary.input_dim(), 0.37);
    const RealVector z0 = spec.dictionary.eval(probe_base);
    for (int s = 1; s <= 4; ++s) {
        RealVector x = probe_base * (0.5 * s) + RealVector::Constant(probe_base.size(), 0.11 * s);
        const RealVector z = spec.dictionary.eval(x);
        for (Index i = 0; i < z.size(); ++i)
            if (std::abs(z(i) - z0(i)) > 1e-12)
                coordinate_constant[static_cast<size_t>(i)] = false;
    }

    for (Index j = 0; j < vals.size(); ++j) {
        const bool conserved_value =
            spec.time_kind == TimeKind::Discrete
                ? std::abs(vals(j) - std::complex<double>(1.0)) <= tol
                : std::abs(vals(j)) <= tol;
        if (!conserved_value) continue;

        // an eigenfunction supported only on constant coordinates is the
        // trivial constant observable
        double nonconst_mass = 0.0, total = 0.0;
        for (Index i = 0; i < spec.eigenfunction_coeffs.cols(); ++i) {
            const double a = std::norm(spec.eigenfunction_coeffs(j, i));
            total += a;
            if (!coordinate_constant[static_cast<size_t>(i)]) nonconst_mass += a;
        }
        if (total > 0.0 && nonconst_mass <= 1e-20 * total)
            report.trivial_constant.push_back(j);
        else
            report.conserved.push_back(j);
    }
    return report;
}

}  // namespace koop
