#pragma once

#include "koopkit/koopfit.hpp"

namespace koop {

/// Lifted control-affine model z' = A z + sum_i B_i z u_i, y = V z.
struct BilinearLiftedModel {
    RealMatrix A;               // D x D lifted drift (continuous time)
    std::vector<RealMatrix> B;  // one D x D matrix per input channel
    RealMatrix V;               // m x D output projection
    Dictionary lifting;
    double fit_residual = 0.0;  // worst sample residual across drift and B fits
    std::vector<std::string> warnings;

    Index lifted_dim() const { return A.rows(); }
    Index input_dim() const { return static_cast<Index>(B.size()); }
};

/// Fits A as generator EDMD on the drift and each B_i by least squares so
/// that B_i phi(x) matches the Lie derivative J_phi(x) g_i(x) on the samples
/// (columns). A residual above span_tol flags a span deficiency and records
/// the worst sample.
BilinearLiftedModel lift_control_fields(const ControlAffineSystem& sys,
                                        const Dictionary& lifting,
                                        const RealMatrix& samples,
                                        double span_tol = 1e-8);

/// Exact piecewise-constant-input simulation: per step
/// z+ = expm((A + sum_i B_i u_i) ts) z. Returns the lifted trajectory with
/// inputs recorded; project with output_trajectory for the model outputs.
Trajectory simulate_bilinear(const BilinearLiftedModel& model, const RealVector& z0,
                             const InputSignal& u, double ts, int steps);

/// y_k = V z_k rows for a lifted trajectory.
RealMatrix output_trajectory(const BilinearLiftedModel& model, const Trajectory& lifted);

/// Freezes the bilinear input map at zbar: z' = A z + G(zbar) u with
/// G = [B_1 zbar | B_2 zbar | ...].
struct LocalLinearization {
    RealMatrix A;
    RealMatrix G;  // D x m
};

LocalLinearization local_linearize(const BilinearLiftedModel& model,
                                   const RealVector& zbar);

/// Zero-order hold: A_d = expm(A ts), B_d = (int_0^ts expm(A tau) dtau) G,
/// both read off the augmented-matrix exponential.
struct ZohResult {
    RealMatrix Ad;
    RealMatrix Bd;
};

ZohResult zoh_discretize(const RealMatrix& a, const RealMatrix& g, double ts);

/// Wraps a general x' = f(state, input) system into control-affine form on
/// the inflated state (state, v) with v' = u, so direct control acts on the
/// input's rate of change.
ControlAffineSystem state_inflate(
    std::function<RealVector(const RealVector&, const RealVector&)> f_general,
    Index state_dim, Index input_dim);

struct MpcProblem {
    int horizon;        // N >= 1
    RealMatrix Q;       // output weight, PSD
    RealMatrix R;       // input weight, PD
    RealVector u_lower; // per-channel box bounds
    RealVector u_upper;
    RealMatrix y_ref;   // one row (held constant) or one row per step
    double ts;
};

struct QpSolution {
    RealVector u;            // minimizer stacked over the horizon
    bool converged;
    int iterations;
    double projected_gradient_norm;
};

/// Box-constrained QP min 1/2 u^T H u + g^T u via accelerated projected
/// gradient with a fixed iteration budget; stops when the projected-gradient
/// norm falls below tol. An optional warm start is projected onto the box.
QpSolution solve_box_qp(const RealMatrix& h, const RealVector& g,
                        const RealVector& lower, const RealVector& upper,
                        int max_iterations = 500, double tol = 1e-8,
                        const RealVector& warm_start = RealVector());

struct MpcStep {
    double t;
    RealVector state;
    RealVector input;
    double stage_cost;
    bool qp_converged;
};

struct MpcResult {
    std::vector<MpcStep> steps;
    Trajectory closed_loop;   // plant states at the ts grid, applied inputs
    double total_cost;
    int qp_nonconverged_steps;
};

/// Receding-horizon control of the true plant through the lifted model:
/// lift the current state, linearize the input map at the current z,
/// ZOH-discretize, solve the condensed box QP, apply the first input to the
/// plant for one ts via RK4, repeat.
MpcResult run_mpc(const ControlAffineSystem& sys, const BilinearLiftedModel& model,
                  const MpcProblem& problem, const RealVector& x0, int total_steps,
                  int plant_substeps = 10);

}  // namespace koop
