#include "koopkit/koopfit.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

namespace koop {

namespace {

RealMatrix fit_transition(const RealMatrix& zx, const RealMatrix& zy,
                          std::optional<Index> rank) {
    const RealMatrix zx_pinv = rank ? pinv_truncated(zx, *rank) : pinv(zx);
    return zy * zx_pinv;
}

OutputMap state_outputs(Index n) {
    return {[](const RealVector& x) { return x; }, n};
}

RealMatrix evaluate_outputs(const OutputMap& out, const RealMatrix& states_cols) {
    RealMatrix y(out.dim, states_cols.cols());
    for (Index c = 0; c < states_cols.cols(); ++c)
        y.col(c) = out.fn(states_cols.col(c));
    return y;
}

}  // namespace

ComplexVector SpectralModel::eigenfunctions(const RealVector& x) const {
    return eigenfunction_coeffs * dictionary.eval(x).cast<std::complex<double>>();
}

std::complex<double> ComplexPolynomial::eval(const RealVector& x) const {
    std::complex<double> acc = 0.0;
    for (const auto& [exps, coeff] : terms) {
        double mono = 1.0;
        for (size_t i = 0; i < exps.size(); ++i)
            for (int p = 0; p < exps[i]; ++p) mono *= x(static_cast<Index>(i));
        acc += coeff * mono;
    }
    return acc;
}

ComplexPolynomial ComplexPolynomial::operator*(const ComplexPolynomial& other) const {
    ComplexPolynomial out;
    out.n = std::max(n, other.n);
    for (const auto& [ea, ca] : terms) {
        for (const auto& [eb, cb] : other.terms) {
            std::vector<int> e(static_cast<size_t>(out.n), 0);
            for (size_t i = 0; i < ea.size(); ++i) e[i] += ea[i];
            for (size_t i = 0; i < eb.size(); ++i) e[i] += eb[i];
            out.terms[e] += ca * cb;
        }
    }
    return out;
}

ComplexPolynomial ComplexPolynomial::pow(int k) const {
    ComplexPolynomial out;
    out.n = n;
    out.terms[std::vector<int>(static_cast<size_t>(n), 0)] = 1.0;
    for (int i = 0; i < k; ++i) out = out * (*this);
    return out;
}

RealVector ConjugacyMap::residual(const RealVector& x) const {
    return coefficients * basis.eval(x);
}

RealVector ConjugacyMap::diffeomorphism(const RealVector& x) const {
    return x + residual(x);
}

KoopmanModel fit_dmd(const SnapshotPair& pairs, std::optional<Index> rank) {
    if (pairs.X.cols() < 1)
        throw InsufficientDataError("fit_dmd: no snapshot columns");
    if (pairs.X.rows() != pairs.Xplus.rows() || pairs.X.cols() != pairs.Xplus.cols())
        throw ShapeError("fit_dmd: snapshot shape mismatch");
    const Index n = pairs.X.rows();
    KoopmanModel model{identity_dictionary(n),
                       fit_transition(pairs.X, pairs.Xplus, rank),
                       RealMatrix::Identity(n, n)};
    model.linearity_residual = (pairs.Xplus - model.A * pairs.X).norm();
    return model;
}

KoopmanModel fit_edmd(const SnapshotPair& pairs, const Dictionary& dictionary,
                      std::optional<OutputMap> outputs) {
    if (pairs.X.cols() < 1)
        throw InsufficientDataError("fit_edmd: no snapshot columns");
    const OutputMap out = outputs ? *outputs : state_outputs(pairs.X.rows());

    const RealMatrix zx = dictionary.lift(pairs.X);
    const RealMatrix zy = dictionary.lift(pairs.Xplus);
    const RealMatrix y = evaluate_outputs(out, pairs.X);

    const RealMatrix zx_pinv = pinv(zx);
    KoopmanModel model{dictionary, zy * zx_pinv, y * zx_pinv};
    model.linearity_residual = (zy - model.A * zx).norm();
    model.reconstruction_residual = (y - model.C * zx).norm();
    if (pairs.X.cols() < dictionary.output_dim())
        model.warnings.push_back("fewer snapshot columns than lifted dimension; "
                                 "regression is rank deficient");
    return model;
}

KoopmanModel fit_edmd(std::span<const Trajectory> trajs, const Dictionary& dictionary,
                      std::optional<OutputMap> outputs) {
    return fit_edmd(snapshot_pairs(trajs), dictionary, std::move(outputs));
}

KoopmanModel fit_generator_edmd(const RealMatrix& states,
                                const RealMatrix& derivatives,
                                const Dictionary& dictionary,
                                std::optional<OutputMap> outputs) {
    if (states.cols() < 1)
        throw InsufficientDataError("fit_generator_edmd: no samples");
    if (states.rows() != derivatives.rows() || states.cols() != derivatives.cols())
        throw ShapeError("fit_generator_edmd: states/derivatives shape mismatch");
    const OutputMap out = outputs ? *outputs : state_outputs(states.rows());

    const RealMatrix zx = dictionary.lift(states);
    RealMatrix zdot(dictionary.output_dim(), states.cols());
    for (Index c = 0; c < states.cols(); ++c)
        zdot.col(c) = dictionary.jacobian(states.col(c)) * derivatives.col(c);
    const RealMatrix y = evaluate_outputs(out, states);

    const RealMatrix zx_pinv = pinv(zx);
    KoopmanModel model{dictionary, zdot * zx_pinv, y * zx_pinv,
                       TimeKind::Continuous};
    model.linearity_residual = (zdot - model.A * zx).norm();
    model.reconstruction_residual = (y - model.C * zx).norm();
    if (states.cols() < dictionary.output_dim())
        model.warnings.push_back("fewer samples than lifted dimension; "
                                 "regression is rank deficient");
    return model;
}

SpectralModel extract_spectrum(const KoopmanModel& model) {
    const Index d = model.lifted_dim();
    const EigenDecomposition dec = eig(model.A);

    // condition number of the right eigenvector matrix decides the structure
    Eigen::JacobiSVD<ComplexMatrix> vsvd(dec.right_vectors);
    const double smin = vsvd.singularValues()(d - 1);
    const double smax = vsvd.singularValues()(0);
    const bool defective = smin <= 0.0 || smax / smin > 1e8;

    SpectralModel spec{ComplexMatrix(), true, ComplexMatrix(), ComplexMatrix(),
                       model.dictionary, model.sampling, model.ts};
    if (!defective) {
        spec.transition = dec.eigenvalues.asDiagonal();
        spec.eigenfunction_coeffs = dec.right_vectors.inverse();
        spec.modes = model.C.cast<std::complex<double>>() * dec.right_vectors;
    } else {
        Eigen::ComplexSchur<ComplexMatrix> schur(
            model.A.cast<std::complex<double>>(), true);
        if (schur.info() != Eigen::Success)
            throw NumericError("extract_spectrum: Schur iteration failed");
        spec.diagonal = false;
        spec.transition = schur.matrixT();
        spec.eigenfunction_coeffs = schur.matrixU().adjoint();
        spec.modes = model.C.cast<std::complex<double>>() * schur.matrixU();
    }
    return spec;
}

RealMatrix predict(const KoopmanModel& model, const RealVector& x0, int k) {
    if (k < 0) throw ValidationError("predict: k must be >= 0");
    RealVector z = model.dictionary.eval(x0);
    RealMatrix propagator;
    if (model.sampling == TimeKind::Discrete) {
        propagator = model.A;
    } else {
        if (k > 0 && model.ts <= 0.0)
            throw ValidationError("predict: continuous model needs ts > 0");
        propagator = k > 0 ? expm(RealMatrix(model.A * model.ts))
                           : RealMatrix::Identity(z.size(), z.size());
    }
    RealMatrix y(k + 1, model.output_dim());
    for (int j = 0; j <= k; ++j) {
        y.row(j) = (model.C * z).transpose();
        if (j < k) z = propagator * z;
    }
    return y;
}

RealMatrix predict(const SpectralModel& model, const RealVector& x0, int k) {
    if (k < 0) throw ValidationError("predict: k must be >= 0");
    ComplexVector phi = model.eigenfunctions(x0);
    ComplexMatrix propagator;
    if (model.time_kind == TimeKind::Discrete) {
        propagator = model.transition;
    } else {
        if (k > 0 && model.ts <= 0.0)
            throw ValidationError("predict: continuous model needs ts > 0");
        propagator = k > 0 ? expm(ComplexMatrix(model.transition * model.ts))
                           : ComplexMatrix::Identity(phi.size(), phi.size());
    }
    RealMatrix y(k + 1, model.output_dim());
    for (int j = 0; j <= k; ++j) {
        y.row(j) = (model.modes * phi).real().transpose();
        if (j < k) phi = propagator * phi;
    }
    return y;
}

namespace {

void check_conjugacy_basis(const Dictionary& basis) {
    const RealVector zero = RealVector::Zero(basis.input_dim());
    if (basis.eval(zero).cwiseAbs().maxCoeff() > 1e-12 ||
        basis.jacobian(zero).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError(
            "fit_conjugacy: basis must vanish with its Jacobian at the origin "
            "(degree >= 2 terms only)");
}

// Extracts the (exponents, coefficients) polynomial form of a dictionary, if
// it has one.
std::optional<std::pair<std::vector<std::vector<int>>, RealMatrix>>
polynomial_form(const Dictionary& dict) {
    if (!dict.spec()) return std::nullopt;
    if (const auto* p = std::get_if<PolynomialSpec>(&*dict.spec()))
        return std::make_pair(p->exponents, p->coefficients);
    if (const auto* m = std::get_if<MonomialSpec>(&*dict.spec())) {
        auto exps = monomial_exponents(m->n, m->max_degree, m->include_constant);
        const Index d = static_cast<Index>(exps.size());
        return std::make_pair(std::move(exps), RealMatrix(RealMatrix::Identity(d, d)));
    }
    if (const auto* i = std::get_if<IdentitySpec>(&*dict.spec())) {
        auto exps = monomial_exponents(i->n, 1, false);
        return std::make_pair(std::move(exps),
                              RealMatrix(RealMatrix::Identity(i->n, i->n)));
    }
    return std::nullopt;
}

ConjugacyFit solve_conjugacy(const std::function<RealVector(const RealVector&)>& dyn,
                             const RealMatrix& linear_part, const Dictionary& basis,
                             const RealMatrix& samples, TimeKind kind,
                             const ConjugacyOptions& opts) {
    check_conjugacy_basis(basis);
    const Index n = linear_part.rows();
    if (linear_part.cols() != n) throw ShapeError("fit_conjugacy: linear part not square");
    if (samples.rows() != n) throw ShapeError("fit_conjugacy: sample dimension mismatch");
    if (samples.cols() < 1) throw InsufficientDataError("fit_conjugacy: no samples");
    const Index d = basis.output_dim();
    const Index s = samples.cols();

    // Stack per-sample blocks of the linear system in vec(Theta),
    // column-major: block k of columns is beta_lhs(k) I - beta_rhs(k) A.
    RealMatrix m(s * n, n * d);
    RealVector b(s * n);
    for (Index i = 0; i < s; ++i) {
        const RealVector x = samples.col(i);
        RealVector beta_lhs, beta_rhs, rhs;
        if (kind == TimeKind::Discrete) {
            const RealVector fx = dyn(x);
            beta_lhs = basis.eval(fx);         // w(F(x))
            beta_rhs = basis.eval(x);          // A w(x)
            rhs = -(fx - linear_part * x);     // -e(x)
        } else {
            const RealVector fx = dyn(x);      // f(x)
            beta_lhs = basis.jacobian(x) * fx; // J_w(x) f(x)
            beta_rhs = basis.eval(x);          // T w(x)
            rhs = linear_part * x - fx;        // -(f(x) - T x)
        }
        for (Index k = 0; k < d; ++k)
            m.block(i * n, k * n, n, n) =
                beta_lhs(k) * RealMatrix::Identity(n, n) - beta_rhs(k) * linear_part;
        b.segment(i * n, n) = rhs;
    }

    const RealVector theta_vec = lstsq(m, b);
    RealMatrix theta(n, d);
    for (Index k = 0; k < d; ++k) theta.col(k) = theta_vec.segment(k * n, n);

    double max_residual = 0.0;
    const RealVector res = m * theta_vec - b;
    for (Index i = 0; i < s; ++i)
        max_residual = std::max(max_residual, res.segment(i * n, n).norm());

    ConjugacyFit fit{ConjugacyMap{basis, theta, linear_part}, {}, max_residual};
    fit.eigenpairs.time_kind = kind;
    if (max_residual > opts.residual_tol) {
        fit.poor_fit = true;
        std::ostringstream os;
        os << "poor conjugacy fit: max sample residual " << max_residual
           << " exceeds " << opts.residual_tol
           << " (unstable or resonant linear part?)";
        fit.warnings.push_back(os.str());
    }

    // Principle eigenpairs (lambda_j, <u_j, d(x)>), u_j adjoint eigenvectors
    // of the linear part, canonicalized to unit norm.
    const EigenDecomposition dec = eig(linear_part);
    const auto poly_basis = polynomial_form(basis);
    auto coeff = std::make_shared<const RealMatrix>(theta);
    auto basis_copy = std::make_shared<const Dictionary>(basis);
    for (Index j = 0; j < n; ++j) {
        ComplexVector u = dec.left_vectors.col(j);
        u /= u.norm();
        for (Index i = 0; i < u.size(); ++i) {
            if (std::abs(u(i)) > 1e-12) {
                u *= std::conj(u(i)) / std::abs(u(i));
                break;
            }
        }
        Eigenpair pair;
        pair.value = dec.eigenvalues(j);
        pair.provenance = Provenance::Principle;
        pair.multi_index.assign(static_cast<size_t>(n), 0);
        pair.multi_index[static_cast<size_t>(j)] = 1;
        pair.label = "phi" + std::to_string(j + 1);
        const ComplexVector uc = u;
        pair.function = [uc, coeff, basis_copy](const RealVector& x) {
            const RealVector dx = x + *coeff * basis_copy->eval(x);
            return uc.dot(dx.cast<std::complex<double>>());
        };
        if (poly_basis) {
            ComplexPolynomial poly;
            poly.n = n;
            for (Index i = 0; i < n; ++i) {
                std::vector<int> e(static_cast<size_t>(n), 0);
                e[static_cast<size_t>(i)] = 1;
                poly.terms[e] += std::conj(uc(i));
            }
            const auto& [bexps, bcoefs] = *poly_basis;
            for (Index i = 0; i < n; ++i)
                for (Index k = 0; k < d; ++k)
                    for (size_t mi = 0; mi < bexps.size(); ++mi) {
                        const std::complex<double> c =
                            std::conj(uc(i)) * theta(i, k) *
                            bcoefs(k, static_cast<Index>(mi));
                        if (c != 0.0) poly.terms[bexps[mi]] += c;
                    }
            std::erase_if(poly.terms,
                          [](const auto& kv) { return kv.second == 0.0; });
            pair.polynomial = std::move(poly);
        }
        fit.eigenpairs.pairs.push_back(std::move(pair));
    }
    return fit;
}

}  // namespace

ConjugacyFit fit_conjugacy(const DiscreteMap& map, const RealMatrix& linear_part,
                           const Dictionary& basis, const RealMatrix& samples,
                           const ConjugacyOptions& opts) {
    return solve_conjugacy(map.step, linear_part, basis, samples,
                           TimeKind::Discrete, opts);
}

ConjugacyFit fit_conjugacy(const VectorField& field, const RealMatrix& linear_part,
                           const Dictionary& basis, const RealMatrix& samples,
                           const ConjugacyOptions& opts) {
    return solve_conjugacy(field.eval, linear_part, basis, samples,
                           TimeKind::Continuous, opts);
}

EigenpairSet eigenpair_products(const EigenpairSet& principles,
                                int max_total_degree) {
    if (max_total_degree < 1)
        throw ValidationError("eigenpair_products: max_total_degree must be >= 1");
    const size_t m = principles.pairs.size();
    EigenpairSet out;
    out.time_kind = principles.time_kind;
    if (m == 0) return out;

    auto factors = std::make_shared<const std::vector<Eigenpair>>(principles.pairs);

    std::vector<int> current(m, 0);
    std::function<void(size_t, int)> emit = [&](size_t pos, int remaining) {
        if (pos == m - 1) {
            current[pos] = remaining;
            const int total =
                std::accumulate(current.begin(), current.end(), 0);
            // unit multi-index: pass the original pair through unchanged
            if (total == 1) {
                const size_t which = static_cast<size_t>(
                    std::find(current.begin(), current.end(), 1) - current.begin());
                Eigenpair pair = principles.pairs[which];
                pair.multi_index = current;
                out.pairs.push_back(std::move(pair));
                return;
            }
            Eigenpair pair;
            pair.provenance = Provenance::Product;
            pair.multi_index = current;
            if (principles.time_kind == TimeKind::Discrete) {
                pair.value = 1.0;
                for (size_t i = 0; i < m; ++i)
                    pair.value *= std::pow((*factors)[i].value,
                                           static_cast<double>(current[i]));
            } else {
                pair.value = 0.0;
                for (size_t i = 0; i < m; ++i)
                    pair.value += static_cast<double>(current[i]) * (*factors)[i].value;
            }
            std::ostringstream label;
            bool first = true;
            bool have_polys = true;
            for (size_t i = 0; i < m; ++i) {
                if (current[i] == 0) continue;
                if (!first) label << "*";
                label << "(" << (*factors)[i].label << ")";
                if (current[i] > 1) label << "^" << current[i];
                first = false;
                have_polys = have_polys && (*factors)[i].polynomial.has_value();
            }
            pair.label = label.str();
            const std::vector<int> idx = current;
            pair.function = [factors, idx](const RealVector& x) {
                std::complex<double> v = 1.0;
                for (size_t i = 0; i < idx.size(); ++i)
                    for (int p = 0; p < idx[i]; ++p) v *= (*factors)[i].function(x);
                return v;
            };
            if (have_polys) {
                ComplexPolynomial poly;
                poly.n = (*factors)[0].polynomial->n;
                poly.terms[std::vector<int>(static_cast<size_t>(poly.n), 0)] = 1.0;
                for (size_t i = 0; i < m; ++i)
                    if (idx[i] > 0)
                        poly = poly * (*factors)[i].polynomial->pow(idx[i]);
                pair.polynomial = std::move(poly);
            }
            out.pairs.push_back(std::move(pair));
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            current[pos] = e;
            emit(pos + 1, remaining - e);
        }
    };
    for (int total = 1; total <= max_total_degree; ++total) emit(0, total);
    return out;
}

KoopmanModel hankel_dmd(const RealVector& series, Index depth,
                        std::optional<Index> rank) {
    const HankelMatrix h = hankel(series, depth);
    const Index cols = h.values.cols();
    if (cols < 2)
        throw InsufficientDataError("hankel_dmd: need at least two delay vectors");
    SnapshotPair pairs{h.values.leftCols(cols - 1), h.values.rightCols(cols - 1)};
    return fit_dmd(pairs, rank);
}

SpectralModel spectral_from_eigenpairs(const EigenpairSet& pairs,
                                       const RealMatrix& state_samples,
                                       std::optional<OutputMap> outputs,
                                       double ts) {
    if (pairs.pairs.empty())
        throw ValidationError("spectral_from_eigenpairs: empty eigenpair set");
    for (const auto& p : pairs.pairs)
        if (!p.polynomial)
            throw ValidationError(
                "spectral_from_eigenpairs: all eigenpairs need polynomial form");

    const Index n = state_samples.rows();
    const OutputMap out = outputs ? *outputs : state_outputs(n);

    // union of monomials across eigenfunctions, graded-lex ordered
    auto graded_less = [](const std::vector<int>& a, const std::vector<int>& b) {
        const int da = std::accumulate(a.begin(), a.end(), 0);
        const int db = std::accumulate(b.begin(), b.end(), 0);
        if (da != db) return da < db;
        return a > b;  // lexicographic descent within a grade
    };
    std::vector<std::vector<int>> monos;
    for (const auto& p : pairs.pairs)
        for (const auto& [e, c] : p.polynomial->terms) monos.push_back(e);
    std::sort(monos.begin(), monos.end(), graded_less);
    monos.erase(std::unique(monos.begin(), monos.end()), monos.end());

    const Index dp = static_cast<Index>(pairs.pairs.size());
    const Index dm = static_cast<Index>(monos.size());
    ComplexMatrix w = ComplexMatrix::Zero(dp, dm);
    for (Index j = 0; j < dp; ++j)
        for (const auto& [e, c] : pairs.pairs[static_cast<size_t>(j)].polynomial->terms) {
            const auto it = std::lower_bound(monos.begin(), monos.end(), e, graded_less);
            w(j, static_cast<Index>(it - monos.begin())) = c;
        }

    std::vector<std::string> labels;
    for (const auto& e : monos) labels.push_back(monomial_label(e));
    Dictionary dict = polynomial_dictionary(
        n, monos, RealMatrix(RealMatrix::Identity(dm, dm)), std::move(labels));

    SpectralModel spec{ComplexMatrix::Zero(dp, dp), true, w, ComplexMatrix(),
                       dict, pairs.time_kind, ts};
    for (Index j = 0; j < dp; ++j)
        spec.transition(j, j) = pairs.pairs[static_cast<size_t>(j)].value;

    // fit modes: V phi(x) should reconstruct the outputs on the samples
    ComplexMatrix phi(dp, state_samples.cols());
    for (Index c = 0; c < state_samples.cols(); ++c)
        phi.col(c) = spec.eigenfunctions(state_samples.col(c));
    const RealMatrix y = evaluate_outputs(out, state_samples);
    const ComplexMatrix vt = phi.transpose()
                                 .completeOrthogonalDecomposition()
                                 .solve(y.transpose().cast<std::complex<double>>());
    spec.modes = vt.transpose();
    return spec;
}

}  // namespace koop
