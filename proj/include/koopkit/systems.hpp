#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "koopkit/linalg.hpp"

namespace koop {

/// Known spectral ground truth carried by the built-in benchmark systems so
/// test suites read expectations from one place.
struct KnownEigenpair {
    std::complex<double> value;
    std::function<double(const RealVector&)> function;
    std::string label;
};

struct DiscreteMap {
    Index dimension;
    std::function<RealVector(const RealVector&)> step;
    std::string name;
    std::map<std::string, double> params;
    std::vector<KnownEigenpair> known_eigenpairs;
};

struct VectorField {
    Index dimension;
    std::function<RealVector(const RealVector&)> eval;
    std::string name;
    std::map<std::string, double> params;
    std::vector<KnownEigenpair> known_eigenpairs;
};

struct ControlAffineSystem {
    VectorField drift;
    std::vector<VectorField> control_fields;
    std::function<RealVector(const RealVector&)> output;
    Index input_dim() const { return static_cast<Index>(control_fields.size()); }
    Index state_dim() const { return drift.dimension; }
    /// drift(x) + sum_i g_i(x) u_i
    RealVector rhs(const RealVector& x, const RealVector& u) const;
};

/// Time-indexed state (and optionally input) samples; the universal data
/// ingestion unit. Rows of states are samples.
class Trajectory {
public:
    Trajectory(RealVector times, RealMatrix states,
               std::optional<RealMatrix> inputs = std::nullopt);

    const RealVector& times() const { return times_; }
    const RealMatrix& states() const { return states_; }
    const std::optional<RealMatrix>& inputs() const { return inputs_; }
    Index samples() const { return times_.size(); }
    Index dimension() const { return states_.cols(); }
    RealVector state(Index k) const { return states_.row(k).transpose(); }

private:
    RealVector times_;
    RealMatrix states_;
    std::optional<RealMatrix> inputs_;
};

/// Piecewise signal u(t); sampled at interval starts and held (ZOH).
using InputSignal = std::function<RealVector(double)>;

/// x -> (a x1, b x2 + (b - a^2) x1^2), a, b in [0, 1].
/// Principle eigenpairs (a, x1) and (b, x2 + x1^2); product pair (a^2, x1^2).
DiscreteMap example1_map(double a, double b);

/// Control-affine benchmark: drift (c x1, d x2 + (d - c^2) x1^2),
/// g1 = (1, x1^2), g2 = (0, 1), output = full state.
ControlAffineSystem example4_system(double c, double d);

/// Scalar non-hyperbolic field x -> -x^3. Carries the generator eigenpair
/// (s = -1, exp(-1/(2 x^2))) with the continuous extension phi(0) = 0.
VectorField cubic_decay();

/// Classical fixed-step RK4. Runs n = round(t_end/dt) steps of size dt.
Trajectory integrate_rk4(const VectorField& f, const RealVector& x0,
                         double t_end, double dt);

/// RK4 for controlled systems; the input is sampled at each step start and
/// held constant across the step.
Trajectory integrate_rk4(const ControlAffineSystem& sys, const RealVector& x0,
                         double t_end, double dt, const InputSignal& u);

/// x0, F(x0), ..., F^(k)(x0) with integer step times 0..k.
Trajectory simulate_map(const DiscreteMap& map, const RealVector& x0, int k);

}  // namespace koop
