#include "koopkit/embed.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace koop {

SnapshotPair snapshot_pairs(const Trajectory& traj) {
    return snapshot_pairs(std::span<const Trajectory>(&traj, 1));
}

SnapshotPair snapshot_pairs(std::span<const Trajectory> trajs) {
    if (trajs.empty()) throw InsufficientDataError("snapshot_pairs: no trajectories");
    const Index dim = trajs.front().dimension();
    Index total = 0;
    for (const auto& t : trajs) {
        if (t.dimension() != dim)
            throw ShapeError("snapshot_pairs: mixed state dimensions");
        if (t.samples() < 2)
            throw InsufficientDataError(
                "snapshot_pairs: trajectory needs at least 2 samples");
        const double dt = t.times()(1) - t.times()(0);
        for (Index k = 1; k + 1 < t.samples(); ++k)
            if (std::abs(t.times()(k + 1) - t.times()(k) - dt) > 1e-9 * std::abs(dt))
                throw ValidationError("snapshot_pairs: non-uniform sampling");
        total += t.samples() - 1;
    }
    SnapshotPair out;
    out.X.resize(dim, total);
    out.Xplus.resize(dim, total);
    Index col = 0;
    for (const auto& t : trajs) {
        for (Index k = 0; k + 1 < t.samples(); ++k, ++col) {
            out.X.col(col) = t.states().row(k).transpose();
            out.Xplus.col(col) = t.states().row(k + 1).transpose();
        }
    }
    return out;
}

HankelMatrix hankel(const RealVector& series, Index depth) {
    const Index T = series.size();
    if (depth < 1) throw ValidationError("hankel: depth must be >= 1");
    if (depth > T) throw ShapeError("hankel: depth exceeds series length");
    HankelMatrix h;
    h.depth = depth;
    h.source_length = T;
    h.values.resize(depth, T - depth + 1);
    for (Index i = 0; i < depth; ++i)
        for (Index j = 0; j + depth <= T; ++j)
            h.values(i, j) = series(i + j);
    return h;
}

Trajectory delay_embed(const RealVector& series, Index num_delays) {
    const Index T = series.size();
    if (num_delays < 1) throw ValidationError("delay_embed: N must be >= 1");
    if (num_delays >= T) throw ShapeError("delay_embed: N must be < series length");
    const Index rows = T - num_delays;
    RealVector times(rows);
    RealMatrix states(rows, num_delays + 1);
    for (Index k = 0; k < rows; ++k) {
        times(k) = static_cast<double>(k);
        for (Index i = 0; i <= num_delays; ++i) states(k, i) = series(k + i);
    }
    return Trajectory(times, states);
}

Dictionary::Dictionary(Index input_dim, Index output_dim,
                       std::function<RealVector(const RealVector&)> eval,
                       std::function<RealMatrix(const RealVector&)> jacobian,
                       std::vector<std::string> labels,
                       std::optional<DictionarySpec> spec)
    : input_dim_(input_dim),
      output_dim_(output_dim),
      eval_(std::move(eval)),
      jacobian_(std::move(jacobian)),
      labels_(std::move(labels)),
      spec_(std::move(spec)) {
    if (static_cast<Index>(labels_.size()) != output_dim_)
        throw ShapeError("dictionary: label count != output dimension");
}

RealVector Dictionary::eval(const RealVector& x) const {
    if (x.size() != input_dim_)
        throw ShapeError("dictionary eval: input dimension mismatch");
    RealVector z = eval_(x);
    if (z.size() != output_dim_)
        throw ShapeError("dictionary eval: output dimension mismatch");
    return z;
}

RealMatrix Dictionary::jacobian(const RealVector& x) const {
    if (x.size() != input_dim_)
        throw ShapeError("dictionary jacobian: input dimension mismatch");
    RealMatrix j = jacobian_(x);
    if (j.rows() != output_dim_ || j.cols() != input_dim_)
        throw ShapeError("dictionary jacobian: shape mismatch");
    return j;
}

RealMatrix Dictionary::lift(const RealMatrix& states) const {
    RealMatrix z(output_dim_, states.cols());
    for (Index c = 0; c < states.cols(); ++c) z.col(c) = eval(states.col(c));
    return z;
}

std::vector<std::vector<int>> monomial_exponents(Index n, int max_degree,
                                                 bool include_constant) {
    std::vector<std::vector<int>> out;
    if (include_constant) out.emplace_back(static_cast<size_t>(n), 0);
    std::vector<int> current(static_cast<size_t>(n), 0);
    // graded order, lexicographic (highest first exponent first) within a grade
    std::function<void(Index, int)> emit = [&](Index pos, int remaining) {
        if (pos == n - 1) {
            current[static_cast<size_t>(pos)] = remaining;
            out.push_back(current);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            current[static_cast<size_t>(pos)] = e;
            emit(pos + 1, remaining - e);
        }
    };
    for (int d = 1; d <= max_degree; ++d) emit(0, d);
    return out;
}

std::string monomial_label(const std::vector<int>& exponents) {
    std::ostringstream os;
    bool first = true;
    for (size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] == 0) continue;
        if (!first) os << "*";
        os << "x" << (i + 1);
        if (exponents[i] > 1) os << "^" << exponents[i];
        first = false;
    }
    if (first) os << "1";
    return os.str();
}

namespace {

double eval_monomial(const std::vector<int>& exps, const RealVector& x) {
    double v = 1.0;
    for (size_t i = 0; i < exps.size(); ++i)
        for (int p = 0; p < exps[i]; ++p) v *= x(static_cast<Index>(i));
    return v;
}

// d/dx_j of the monomial given by exps, evaluated at x
double eval_monomial_partial(const std::vector<int>& exps, const RealVector& x,
                             size_t j) {
    if (exps[j] == 0) return 0.0;
    double v = static_cast<double>(exps[j]);
    for (size_t i = 0; i < exps.size(); ++i) {
        const int e = exps[i] - (i == j ? 1 : 0);
        for (int p = 0; p < e; ++p) v *= x(static_cast<Index>(i));
    }
    return v;
}

Dictionary make_polynomial(Index n, std::vector<std::vector<int>> exponents,
                           RealMatrix coefficients, std::vector<std::string> labels,
                           DictionarySpec spec) {
    const Index d = coefficients.rows();
    auto exps = std::make_shared<const std::vector<std::vector<int>>>(std::move(exponents));
    auto coef = std::make_shared<const RealMatrix>(std::move(coefficients));
    auto eval = [exps, coef](const RealVector& x) {
        RealVector mono(static_cast<Index>(exps->size()));
        for (size_t k = 0; k < exps->size(); ++k)
            mono(static_cast<Index>(k)) = eval_monomial((*exps)[k], x);
        return RealVector(*coef * mono);
    };
    auto jac = [n, exps, coef, d](const RealVector& x) {
        RealMatrix mono_jac(static_cast<Index>(exps->size()), n);
        for (size_t k = 0; k < exps->size(); ++k)
            for (size_t j = 0; j < static_cast<size_t>(n); ++j)
                mono_jac(static_cast<Index>(k), static_cast<Index>(j)) =
                    eval_monomial_partial((*exps)[k], x, j);
        return RealMatrix(*coef * mono_jac);
    };
    return Dictionary(n, d, eval, jac, std::move(labels), std::move(spec));
}

}  // namespace

Dictionary monomial_dictionary(Index n, int max_degree, bool include_constant) {
    if (n < 1) throw ValidationError("monomial_dictionary: n must be >= 1");
    if (max_degree < 1)
        throw ValidationError("monomial_dictionary: max_degree must be >= 1");
    auto exps = monomial_exponents(n, max_degree, include_constant);
    const Index d = static_cast<Index>(exps.size());
    RealMatrix coef = RealMatrix::Identity(d, d);
    std::vector<std::string> labels;
    labels.reserve(exps.size());
    for (const auto& e : exps) labels.push_back(monomial_label(e));
    return make_polynomial(n, std::move(exps), std::move(coef), std::move(labels),
                           MonomialSpec{n, max_degree, include_constant});
}

Dictionary identity_dictionary(Index n) {
    if (n < 1) throw ValidationError("identity_dictionary: n must be >= 1");
    auto exps = monomial_exponents(n, 1, false);
    RealMatrix coef = RealMatrix::Identity(n, n);
    std::vector<std::string> labels;
    for (const auto& e : exps) labels.push_back(monomial_label(e));
    return make_polynomial(n, std::move(exps), std::move(coef), std::move(labels),
                           IdentitySpec{n});
}

Dictionary monomial_range_dictionary(Index n, int min_degree, int max_degree) {
    if (min_degree < 1 || max_degree < min_degree)
        throw ValidationError("monomial_range_dictionary: bad degree range");
    auto all = monomial_exponents(n, max_degree, false);
    std::vector<std::vector<int>> exps;
    for (auto& e : all) {
        int total = 0;
        for (int v : e) total += v;
        if (total >= min_degree) exps.push_back(std::move(e));
    }
    const Index d = static_cast<Index>(exps.size());
    std::vector<std::string> labels;
    for (const auto& e : exps) labels.push_back(monomial_label(e));
    return polynomial_dictionary(n, std::move(exps),
                                 RealMatrix(RealMatrix::Identity(d, d)),
                                 std::move(labels));
}

Dictionary custom_dictionary(
    std::vector<std::function<double(const RealVector&)>> functions,
    std::vector<std::function<RealVector(const RealVector&)>> gradients,
    std::vector<std::string> labels, Index input_dim) {
    if (functions.size() != gradients.size() || functions.size() != labels.size())
        throw ShapeError("custom_dictionary: inconsistent component counts");
    if (functions.empty())
        throw ValidationError("custom_dictionary: needs at least one observable");

    const Index d = static_cast<Index>(functions.size());
    auto fns = std::make_shared<const decltype(functions)>(std::move(functions));
    auto grads = std::make_shared<const decltype(gradients)>(std::move(gradients));

    auto eval = [fns, d](const RealVector& x) {
        RealVector z(d);
        for (Index i = 0; i < d; ++i) z(i) = (*fns)[static_cast<size_t>(i)](x);
        return z;
    };
    auto jac = [grads, d, input_dim](const RealVector& x) {
        RealMatrix j(d, input_dim);
        for (Index i = 0; i < d; ++i)
            j.row(i) = (*grads)[static_cast<size_t>(i)](x).transpose();
        return j;
    };

    Dictionary dict(input_dim, d, eval, jac, std::move(labels));

    // Contract check: supplied gradients must agree with central finite
    // differences on fixed sample points.
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double h = 1e-6;
    for (int s = 0; s < 8; ++s) {
        RealVector x(input_dim);
        for (Index i = 0; i < input_dim; ++i) x(i) = dist(rng);
        const RealMatrix j = dict.jacobian(x);
        for (Index c = 0; c < input_dim; ++c) {
            RealVector xp = x, xm = x;
            xp(c) += h;
            xm(c) -= h;
            const RealVector fd = (dict.eval(xp) - dict.eval(xm)) / (2.0 * h);
            if ((j.col(c) - fd).cwiseAbs().maxCoeff() > 1e-4)
                throw ValidationError(
                    "custom_dictionary: jacobian disagrees with finite differences");
        }
    }
    return dict;
}

Dictionary polynomial_dictionary(Index n, std::vector<std::vector<int>> exponents,
                                 RealMatrix coefficients,
                                 std::vector<std::string> labels) {
    if (coefficients.cols() != static_cast<Index>(exponents.size()))
        throw ShapeError("polynomial_dictionary: coefficient/exponent mismatch");
    for (const auto& e : exponents)
        if (static_cast<Index>(e.size()) != n)
            throw ShapeError("polynomial_dictionary: exponent vector length != n");
    if (labels.empty()) {
        for (Index i = 0; i < coefficients.rows(); ++i)
            labels.push_back("p" + std::to_string(i + 1));
    }
    PolynomialSpec spec{n, exponents, coefficients};
    return make_polynomial(n, std::move(exponents), std::move(coefficients),
                           std::move(labels), std::move(spec));
}

Dictionary dictionary_from_spec(const DictionarySpec& spec) {
    if (const auto* m = std::get_if<MonomialSpec>(&spec))
        return monomial_dictionary(m->n, m->max_degree, m->include_constant);
    if (const auto* i = std::get_if<IdentitySpec>(&spec))
        return identity_dictionary(i->n);
    const auto& p = std::get<PolynomialSpec>(spec);
    return polynomial_dictionary(p.n, p.exponents, p.coefficients);
}

}  // namespace koop
