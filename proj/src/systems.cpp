#include "koopkit/systems.hpp"

#include <cmath>

namespace koop {

RealVector ControlAffineSystem::rhs(const RealVector& x, const RealVector& u) const {
    if (u.size() != input_dim())
        throw ShapeError("control-affine rhs: input dimension mismatch");
    RealVector dx = drift.eval(x);
    for (Index i = 0; i < input_dim(); ++i)
        dx += control_fields[static_cast<size_t>(i)].eval(x) * u(i);
    return dx;
}

Trajectory::Trajectory(RealVector times, RealMatrix states,
                       std::optional<RealMatrix> inputs)
    : times_(std::move(times)), states_(std::move(states)), inputs_(std::move(inputs)) {
    if (states_.rows() != times_.size())
        throw ShapeError("trajectory: states row count != times length");
    for (Index k = 1; k < times_.size(); ++k)
        if (!(times_(k) > times_(k - 1)))
            throw ValidationError("trajectory: times must be strictly increasing");
    ensure_finite(states_, "trajectory states");
    if (inputs_) {
        if (inputs_->rows() != times_.size())
            throw ShapeError("trajectory: inputs row count != times length");
        ensure_finite(*inputs_, "trajectory inputs");
    }
}

DiscreteMap example1_map(double a, double b) {
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0)
        throw ValidationError("example1: parameters must lie in [0, 1]");
    DiscreteMap map;
    map.dimension = 2;
    map.name = "example1";
    map.params = {{"a", a}, {"b", b}};
    map.step = [a, b](const RealVector& x) {
        RealVector y(2);
        y(0) = a * x(0);
        y(1) = b * x(1) + (b - a * a) * x(0) * x(0);
        return y;
    };
    map.known_eigenpairs = {
        {a, [](const RealVector& x) { return x(0); }, "x1"},
        {b, [](const RealVector& x) { return x(1) + x(0) * x(0); }, "x2+x1^2"},
        {a * a, [](const RealVector& x) { return x(0) * x(0); }, "x1^2"},
    };
    return map;
}

ControlAffineSystem example4_system(double c, double d) {
    ControlAffineSystem sys;
    sys.drift.dimension = 2;
    sys.drift.name = "example4_drift";
    sys.drift.params = {{"c", c}, {"d", d}};
    sys.drift.eval = [c, d](const RealVector& x) {
        RealVector dx(2);
        dx(0) = c * x(0);
        dx(1) = d * x(1) + (d - c * c) * x(0) * x(0);
        return dx;
    };
    VectorField g1{2, [](const RealVector& x) {
                       RealVector g(2);
                       g(0) = 1.0;
                       g(1) = x(0) * x(0);
                       return g;
                   },
                   "example4_g1", {}, {}};
    VectorField g2{2, [](const RealVector&) {
                       RealVector g(2);
                       g(0) = 0.0;
                       g(1) = 1.0;
                       return g;
                   },
                   "example4_g2", {}, {}};
    sys.control_fields = {g1, g2};
    sys.output = [](const RealVector& x) { return x; };

    // generator eigenpairs of the drift: (c, x1), (2c, x1^2), the constant,
    // and (d, x2 + gamma x1^2) with gamma = (c^2 - d)/(2c - d) away from the
    // 2c = d resonance
    sys.drift.known_eigenpairs = {
        {c, [](const RealVector& x) { return x(0); }, "x1"},
        {2.0 * c, [](const RealVector& x) { return x(0) * x(0); }, "x1^2"},
        {0.0, [](const RealVector&) { return 1.0; }, "1"},
    };
    if (std::abs(2.0 * c - d) > 1e-12) {
        const double gamma = (c * c - d) / (2.0 * c - d);
        sys.drift.known_eigenpairs.push_back(
            {d,
             [gamma](const RealVector& x) { return x(1) + gamma * x(0) * x(0); },
             "x2+gamma*x1^2"});
    }
    return sys;
}

VectorField cubic_decay() {
    VectorField f;
    f.dimension = 1;
    f.name = "cubic_decay";
    f.eval = [](const RealVector& x) {
        RealVector dx(1);
        dx(0) = -x(0) * x(0) * x(0);
        return dx;
    };
    f.known_eigenpairs = {
        {-1.0,
         [](const RealVector& x) {
             // continuous extension: the limit at the origin is zero
             return x(0) == 0.0 ? 0.0 : std::exp(-1.0 / (2.0 * x(0) * x(0)));
         },
         "exp(-1/(2 x^2))"},
    };
    return f;
}

namespace {

using Rhs = std::function<RealVector(const RealVector&)>;

RealVector rk4_step(const Rhs& f, const RealVector& x, double dt) {
    const RealVector k1 = f(x);
    const RealVector k2 = f(x + 0.5 * dt * k1);
    const RealVector k3 = f(x + 0.5 * dt * k2);
    const RealVector k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// step_rhs(k) yields the autonomous right-hand side valid on step k, which
// realizes the zero-order hold for controlled systems.
Trajectory integrate(const std::function<Rhs(Index)>& step_rhs,
                     const RealVector& x0, double t_end, double dt,
                     Index input_dim, const InputSignal& u) {
    if (dt <= 0.0) throw ValidationError("integrate_rk4: dt must be positive");
    if (t_end < 0.0) throw ValidationError("integrate_rk4: t_end must be >= 0");
    const Index n_steps = static_cast<Index>(std::llround(t_end / dt));
    const Index n = x0.size();

    RealVector times(n_steps + 1);
    RealMatrix states(n_steps + 1, n);
    RealMatrix inputs(n_steps + 1, input_dim);

    RealVector x = x0;
    times(0) = 0.0;
    states.row(0) = x.transpose();
    if (input_dim > 0) inputs.row(0) = u(0.0).transpose();

    for (Index k = 0; k < n_steps; ++k) {
        x = rk4_step(step_rhs(k), x, dt);
        if (!x.allFinite())
            throw DivergenceError("integrate_rk4: non-finite state",
                                  static_cast<double>(k) * dt);
        times(k + 1) = static_cast<double>(k + 1) * dt;
        states.row(k + 1) = x.transpose();
        if (input_dim > 0)
            inputs.row(k + 1) = u(times(k + 1)).transpose();
    }
    if (input_dim > 0)
        return Trajectory(times, states, inputs);
    return Trajectory(times, states);
}

}  // namespace

Trajectory integrate_rk4(const VectorField& f, const RealVector& x0,
                         double t_end, double dt) {
    if (x0.size() != f.dimension)
        throw ShapeError("integrate_rk4: x0 dimension mismatch");
    auto step_rhs = [&f](Index) {
        return Rhs([&f](const RealVector& x) { return f.eval(x); });
    };
    return integrate(step_rhs, x0, t_end, dt, 0, {});
}

Trajectory integrate_rk4(const ControlAffineSystem& sys, const RealVector& x0,
                         double t_end, double dt, const InputSignal& u) {
    if (x0.size() != sys.state_dim())
        throw ShapeError("integrate_rk4: x0 dimension mismatch");
    auto step_rhs = [&sys, &u, dt](Index k) {
        const RealVector uk = u(static_cast<double>(k) * dt);
        return Rhs([&sys, uk](const RealVector& x) { return sys.rhs(x, uk); });
    };
    return integrate(step_rhs, x0, t_end, dt, sys.input_dim(), u);
}

Trajectory simulate_map(const DiscreteMap& map, const RealVector& x0, int k) {
    if (k < 0) throw ValidationError("simulate_map: k must be >= 0");
    if (x0.size() != map.dimension)
        throw ShapeError("simulate_map: x0 dimension mismatch");
    RealVector times(k + 1);
    RealMatrix states(k + 1, map.dimension);
    RealVector x = x0;
    for (int i = 0; i <= k; ++i) {
        times(i) = static_cast<double>(i);
        states.row(i) = x.transpose();
        if (i < k) {
            x = map.step(x);
            if (!x.allFinite())
                throw DivergenceError("simulate_map: non-finite iterate",
                                      static_cast<double>(i));
        }
    }
    return Trajectory(times, states);
}

}  // namespace koop
