#include "koopkit/control.hpp"

#include <cmath>
#include <sstream>

namespace koop {

BilinearLiftedModel lift_control_fields(const ControlAffineSystem& sys,
                                        const Dictionary& lifting,
                                        const RealMatrix& samples,
                                        double span_tol) {
    if (samples.rows() != sys.state_dim())
        throw ShapeError("lift_control_fields: sample dimension mismatch");
    if (samples.cols() < 1)
        throw InsufficientDataError("lift_control_fields: no samples");
    const Index d = lifting.output_dim();
    const Index s = samples.cols();
    const Index m_in = sys.input_dim();

    const RealMatrix z = lifting.lift(samples);
    const RealMatrix z_pinv = pinv(z);

    RealMatrix drift_lie(d, s);
    std::vector<RealMatrix> control_lie(static_cast<size_t>(m_in));
    for (auto& l : control_lie) l.resize(d, s);
    for (Index c = 0; c < s; ++c) {
        const RealVector x = samples.col(c);
        const RealMatrix jac = lifting.jacobian(x);
        drift_lie.col(c) = jac * sys.drift.eval(x);
        for (Index i = 0; i < m_in; ++i)
            control_lie[static_cast<size_t>(i)].col(c) =
                jac * sys.control_fields[static_cast<size_t>(i)].eval(x);
    }

    BilinearLiftedModel model;
    model.lifting = lifting;
    model.A = drift_lie * z_pinv;
    model.B.reserve(static_cast<size_t>(m_in));

    double worst = 0.0;
    Index worst_sample = 0;
    auto track = [&](const RealMatrix& residual_cols) {
        for (Index c = 0; c < residual_cols.cols(); ++c) {
            const double r = residual_cols.col(c).norm();
            if (r > worst) {
                worst = r;
                worst_sample = c;
            }
        }
    };
    track(drift_lie - model.A * z);
    for (Index i = 0; i < m_in; ++i) {
        model.B.push_back(control_lie[static_cast<size_t>(i)] * z_pinv);
        track(control_lie[static_cast<size_t>(i)] -
              model.B[static_cast<size_t>(i)] * z);
    }
    model.fit_residual = worst;

    RealMatrix y(sys.output(samples.col(0)).size(), s);
    for (Index c = 0; c < s; ++c) y.col(c) = sys.output(samples.col(c));
    model.V = y * z_pinv;

    if (worst > span_tol) {
        std::ostringstream os;
        os << "span deficiency: worst Lie-derivative residual " << worst
           << " at sample " << worst_sample
           << " (" << samples.col(worst_sample).transpose() << ")";
        model.warnings.push_back(os.str());
    }
    return model;
}

Trajectory simulate_bilinear(const BilinearLiftedModel& model, const RealVector& z0,
                             const InputSignal& u, double ts, int steps) {
    if (ts <= 0.0) throw ValidationError("simulate_bilinear: ts must be positive");
    if (steps < 0) throw ValidationError("simulate_bilinear: steps must be >= 0");
    if (z0.size() != model.lifted_dim())
        throw ShapeError("simulate_bilinear: z0 dimension mismatch");
    const Index m_in = model.input_dim();

    RealVector times(steps + 1);
    RealMatrix states(steps + 1, model.lifted_dim());
    RealMatrix inputs(steps + 1, m_in);

    RealVector z = z0;
    RealVector u_cached;
    RealMatrix step_exp;
    for (int k = 0; k <= steps; ++k) {
        times(k) = static_cast<double>(k) * ts;
        states.row(k) = z.transpose();
        const RealVector uk = u(times(k));
        if (uk.size() != m_in)
            throw ShapeError("simulate_bilinear: input dimension mismatch");
        inputs.row(k) = uk.transpose();
        if (k == steps) break;
        if (u_cached.size() == 0 || uk != u_cached) {
            RealMatrix gen = model.A;
            for (Index i = 0; i < m_in; ++i)
                gen += uk(i) * model.B[static_cast<size_t>(i)];
            step_exp = expm(RealMatrix(gen * ts));
            u_cached = uk;
        }
        z = step_exp * z;
        if (!z.allFinite())
            throw DivergenceError("simulate_bilinear: non-finite lifted state",
                                  times(k));
    }
    return Trajectory(times, states, inputs);
}

RealMatrix output_trajectory(const BilinearLiftedModel& model,
                             const Trajectory& lifted) {
    return (model.V * lifted.states().transpose()).transpose();
}

LocalLinearization local_linearize(const BilinearLiftedModel& model,
                                   const RealVector& zbar) {
    if (zbar.size() != model.lifted_dim())
        throw ShapeError("local_linearize: zbar dimension mismatch");
    RealMatrix g(model.lifted_dim(), model.input_dim());
    for (Index i = 0; i < model.input_dim(); ++i)
        g.col(i) = model.B[static_cast<size_t>(i)] * zbar;
    return {model.A, g};
}

ZohResult zoh_discretize(const RealMatrix& a, const RealMatrix& g, double ts) {
    if (ts <= 0.0) throw ValidationError("zoh_discretize: ts must be positive");
    if (a.rows() != a.cols()) throw ShapeError("zoh_discretize: A not square");
    if (g.rows() != a.rows()) throw ShapeError("zoh_discretize: G row mismatch");
    const Index d = a.rows();
    const Index m = g.cols();
    RealMatrix augmented = RealMatrix::Zero(d + m, d + m);
    augmented.topLeftCorner(d, d) = a * ts;
    augmented.topRightCorner(d, m) = g * ts;
    const RealMatrix e = expm(augmented);
    return {e.topLeftCorner(d, d), e.topRightCorner(d, m)};
}

ControlAffineSystem state_inflate(
    std::function<RealVector(const RealVector&, const RealVector&)> f_general,
    Index state_dim, Index input_dim) {
    if (state_dim < 1) throw ValidationError("state_inflate: state_dim must be >= 1");
    if (input_dim < 0) throw ValidationError("state_inflate: input_dim must be >= 0");
    const Index total = state_dim + input_dim;

    ControlAffineSystem sys;
    sys.drift.dimension = total;
    sys.drift.name = "inflated_drift";
    sys.drift.eval = [f_general, state_dim, input_dim, total](const RealVector& x) {
        RealVector dx = RealVector::Zero(total);
        dx.head(state_dim) = f_general(x.head(state_dim), x.tail(input_dim));
        return dx;
    };
    for (Index i = 0; i < input_dim; ++i) {
        VectorField gi;
        gi.dimension = total;
        gi.name = "inflated_g" + std::to_string(i + 1);
        gi.eval = [total, state_dim, i](const RealVector&) {
            RealVector g = RealVector::Zero(total);
            g(state_dim + i) = 1.0;
            return g;
        };
        sys.control_fields.push_back(std::move(gi));
    }
    sys.output = [](const RealVector& x) { return x; };
    return sys;
}

namespace {

RealVector clip(const RealVector& u, const RealVector& lo, const RealVector& hi) {
    return u.cwiseMax(lo).cwiseMin(hi);
}

double largest_eigenvalue(const RealMatrix& h) {
    RealVector v = RealVector::Ones(h.rows());
    v /= v.norm();
    double estimate = 0.0;
    for (int it = 0; it < 100; ++it) {
        RealVector hv = h * v;
        const double nrm = hv.norm();
        if (nrm == 0.0) return 0.0;
        v = hv / nrm;
        estimate = v.dot(h * v);
    }
    return estimate;
}

}  // namespace

QpSolution solve_box_qp(const RealMatrix& h, const RealVector& g,
                        const RealVector& lower, const RealVector& upper,
                        int max_iterations, double tol,
                        const RealVector& warm_start) {
    const Index n = g.size();
    if (h.rows() != n || h.cols() != n) throw ShapeError("solve_box_qp: H shape mismatch");
    if (lower.size() != n || upper.size() != n)
        throw ShapeError("solve_box_qp: bound size mismatch");
    for (Index i = 0; i < n; ++i)
        if (lower(i) > upper(i))
            throw ValidationError("solve_box_qp: lower bound exceeds upper bound");

    const double lip = std::max(largest_eigenvalue(h) * 1.05, 1e-12);
    auto objective = [&](const RealVector& u) {
        return 0.5 * u.dot(h * u) + g.dot(u);
    };
    auto projected_gradient_norm = [&](const RealVector& u) {
        return lip * (u - clip(u - (h * u + g) / lip, lower, upper)).norm();
    };

    RealVector u = clip(warm_start.size() == n ? warm_start : RealVector::Zero(n),
                        lower, upper);
    RealVector y = u;
    RealVector best = u;
    double best_obj = objective(u);
    double t = 1.0;
    double pg = projected_gradient_norm(u);
    int it = 0;
    for (; it < max_iterations && pg > tol; ++it) {
        const RealVector u_next = clip(y - (h * y + g) / lip, lower, upper);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double obj_next = objective(u_next);
        if (obj_next > objective(u)) {
            // adaptive restart on objective increase
            y = u_next;
            t = 1.0;
        } else {
            y = u_next + ((t - 1.0) / t_next) * (u_next - u);
            t = t_next;
        }
        u = u_next;
        if (obj_next < best_obj) {
            best_obj = obj_next;
            best = u_next;
        }
        pg = projected_gradient_norm(u);
    }
    if (projected_gradient_norm(best) > pg) best = u;
    return {best, pg <= tol, it, pg};
}

namespace {

void validate_problem(const MpcProblem& p, Index m_in, Index m_out) {
    if (p.horizon < 1) throw ValidationError("mpc: horizon must be >= 1");
    if (p.ts <= 0.0) throw ValidationError("mpc: ts must be positive");
    if (p.Q.rows() != m_out || p.Q.cols() != m_out)
        throw ShapeError("mpc: Q shape mismatch");
    if (p.R.rows() != m_in || p.R.cols() != m_in)
        throw ShapeError("mpc: R shape mismatch");
    if (!p.Q.isApprox(p.Q.transpose(), 1e-12) || !p.R.isApprox(p.R.transpose(), 1e-12))
        throw ValidationError("mpc: Q and R must be symmetric");
    Eigen::SelfAdjointEigenSolver<RealMatrix> qeig(p.Q, Eigen::EigenvaluesOnly);
    if (qeig.eigenvalues().minCoeff() < -1e-12)
        throw ValidationError("mpc: Q must be positive semidefinite");
    Eigen::SelfAdjointEigenSolver<RealMatrix> reig(p.R, Eigen::EigenvaluesOnly);
    if (reig.eigenvalues().minCoeff() <= 0.0)
        throw ValidationError("mpc: R must be positive definite");
    if (p.u_lower.size() != m_in || p.u_upper.size() != m_in)
        throw ShapeError("mpc: bound size mismatch");
    for (Index i = 0; i < m_in; ++i)
        if (p.u_lower(i) > p.u_upper(i))
            throw ValidationError("mpc: lower bound exceeds upper bound");
    if (p.y_ref.cols() != m_out)
        throw ShapeError("mpc: reference column count != output dimension");
    if (p.y_ref.rows() < 1) throw ValidationError("mpc: empty reference");
    if (static_cast<long long>(p.horizon) * m_in > 10000)
        throw ValidationError("mpc: condensed problem too large (horizon*inputs > 1e4)");
}

RealVector reference_at(const MpcProblem& p, Index k) {
    return p.y_ref.row(std::min<Index>(k, p.y_ref.rows() - 1)).transpose();
}

}  // namespace

MpcResult run_mpc(const ControlAffineSystem& sys, const BilinearLiftedModel& model,
                  const MpcProblem& problem, const RealVector& x0, int total_steps,
                  int plant_substeps) {
    const Index m_in = model.input_dim();
    const Index m_out = model.V.rows();
    const Index d = model.lifted_dim();
    validate_problem(problem, m_in, m_out);
    if (total_steps < 1) throw ValidationError("mpc: total_steps must be >= 1");
    if (plant_substeps < 1) throw ValidationError("mpc: plant_substeps must be >= 1");
    if (x0.size() != sys.state_dim()) throw ShapeError("mpc: x0 dimension mismatch");

    const int horizon = problem.horizon;
    const Index nu = static_cast<Index>(horizon) * m_in;
    RealVector lo(nu), hi(nu);
    for (int k = 0; k < horizon; ++k) {
        lo.segment(k * m_in, m_in) = problem.u_lower;
        hi.segment(k * m_in, m_in) = problem.u_upper;
    }

    // stage weights stacked over the horizon
    RealMatrix q_bar = RealMatrix::Zero(static_cast<Index>(horizon) * m_out,
                                        static_cast<Index>(horizon) * m_out);
    RealMatrix r_bar = RealMatrix::Zero(nu, nu);
    for (int k = 0; k < horizon; ++k) {
        q_bar.block(k * m_out, k * m_out, m_out, m_out) = problem.Q;
        r_bar.block(k * m_in, k * m_in, m_in, m_in) = problem.R;
    }

    std::vector<MpcStep> steps;
    double total_cost = 0.0;
    int nonconverged = 0;

    RealVector x = x0;
    RealVector warm = RealVector::Zero(nu);

    RealVector times(total_steps + 1);
    RealMatrix states(total_steps + 1, sys.state_dim());
    RealMatrix inputs(total_steps + 1, m_in);

    for (int step = 0; step < total_steps; ++step) {
        const double t_now = static_cast<double>(step) * problem.ts;
        times(step) = t_now;
        states.row(step) = x.transpose();

        const RealVector z = model.lifting.eval(x);
        const LocalLinearization lin = local_linearize(model, z);
        const ZohResult zoh = zoh_discretize(lin.A, lin.G, problem.ts);

        // condensed prediction: y_k = V A_d^k z + sum_{j<k} V A_d^{k-1-j} B_d u_j
        RealVector free_response(static_cast<Index>(horizon) * m_out);
        RealMatrix forcing = RealMatrix::Zero(static_cast<Index>(horizon) * m_out, nu);
        RealMatrix ad_pow = RealMatrix::Identity(d, d);
        std::vector<RealMatrix> powers(static_cast<size_t>(horizon) + 1);
        powers[0] = ad_pow;
        for (int k = 1; k <= horizon; ++k) {
            ad_pow = zoh.Ad * ad_pow;
            powers[static_cast<size_t>(k)] = ad_pow;
        }
        RealVector ref(static_cast<Index>(horizon) * m_out);
        for (int k = 1; k <= horizon; ++k) {
            const Index row = static_cast<Index>(k - 1) * m_out;
            free_response.segment(row, m_out) =
                model.V * powers[static_cast<size_t>(k)] * z;
            for (int j = 0; j < k; ++j)
                forcing.block(row, static_cast<Index>(j) * m_in, m_out, m_in) =
                    model.V * powers[static_cast<size_t>(k - 1 - j)] * zoh.Bd;
            ref.segment(row, m_out) = reference_at(problem, step + k);
        }

        const RealVector offset = free_response - ref;
        const RealMatrix h = 2.0 * (forcing.transpose() * q_bar * forcing + r_bar);
        const RealVector g = 2.0 * forcing.transpose() * q_bar * offset;

        const QpSolution sol = solve_box_qp(h, g, lo, hi, 500, 1e-8, warm);
        if (!sol.converged) ++nonconverged;

        const RealVector u0 = sol.u.head(m_in);
        inputs.row(step) = u0.transpose();

        const RealVector y_now = sys.output(x);
        const RealVector err = y_now - reference_at(problem, step);
        const double stage = err.dot(problem.Q * err) + u0.dot(problem.R * u0);
        total_cost += stage;
        steps.push_back({t_now, x, u0, stage, sol.converged});

        // shift warm start one block
        warm.head(nu - m_in) = sol.u.tail(nu - m_in);
        warm.tail(m_in) = sol.u.tail(m_in);

        // apply the first input to the true plant for one sampling interval
        const Trajectory plant = integrate_rk4(
            sys, x, problem.ts, problem.ts / plant_substeps,
            [&u0](double) { return u0; });
        x = plant.state(plant.samples() - 1);
    }
    times(total_steps) = static_cast<double>(total_steps) * problem.ts;
    states.row(total_steps) = x.transpose();
    inputs.row(total_steps) = inputs.row(total_steps - 1);

    return MpcResult{std::move(steps), Trajectory(times, states, inputs),
                     total_cost, nonconverged};
}

}  // namespace koop
