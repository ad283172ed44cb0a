#pragma once

#include <functional>
#include <utility>

#include "branchsim/propagate.hpp"

namespace branchsim {

// Time-dependent scale applied to all interaction couplings (1 = undriven).
using DriveScale = std::function<double(double t)>;

// Product-ansatz state. `phi` is stored in the bare convention: it solves
// i hbar d/dt phi = (h_A + V(t)) phi, with the multiplier's phase kept in
// `Lambda` instead of inside the vector. The gauge factor phi * exp(i Lambda/hbar)
// is the solution of the equation that carries -lambda(t); `gauged_phi()`
// reconstructs it. Observables of a single branch are identical either way.
struct MeanFieldState {
  StateVector phi;
  StateVector psi;
  double lambda = 0.0;   // current dissipation rate
  double Lambda = 0.0;   // accumulated phase, trapezoid-synchronized with steps
  double t = 0.0;

  StateVector gauged_phi(double hbar) const;
  void require_normalized(double tol = kNormTol) const;
};

MeanFieldState make_meanfield_state(const StateVector& phi, const StateVector& psi,
                                    const HamiltonianSpec& spec, double t0 = 0.0,
                                    double drive_scale = 1.0);

// lambda(t) evaluated two independent ways: through the bath-side functional
// <psi| (i hbar d/dt - h_B) |psi> with the equation of motion substituted
// (= <psi|V_B|psi>), and through the per-term product of expectations
// sum_k g_k <A_k><B_k>. Throws GaugeInconsistency if they disagree beyond
// `consistency_tol`; the result's imaginary residue must stay below 1e-10.
double dissipation_rate(const MeanFieldState& state, const HamiltonianSpec& spec,
                        double drive_scale = 1.0, double consistency_tol = 1e-8);

// Mirror functional <phi| (i hbar d/dt - h_A) |phi> = <phi|V|phi>.
double dissipation_rate_b(const MeanFieldState& state, const HamiltonianSpec& spec,
                          double drive_scale = 1.0);

// |route1 - route2| and |Im lambda| diagnostics for the same two formulas.
double lambda_gauge_residual(const MeanFieldState& state, const HamiltonianSpec& spec,
                             double drive_scale = 1.0);
double lambda_imag_residual(const MeanFieldState& state, const HamiltonianSpec& spec,
                            double drive_scale = 1.0);

// One self-consistent step of the coupled pair: both effective fields are
// evaluated at the step midpoint through a predictor half-step, then applied
// for the full step. Second-order accurate in dt.
MeanFieldState tdh_step(const MeanFieldState& state, const HamiltonianSpec& spec, double dt,
                        const PropagatorConfig& cfg, const DriveScale& drive = {});

// Trapezoid accumulation Lambda(t) with Lambda(t0) = 0. Times must increase strictly.
std::vector<std::pair<double, double>> accumulate_phase(
    const std::vector<std::pair<double, double>>& lambda_series);

// |<exact | phi (x) psi>|^2.
double meanfield_fidelity(const StateVector& exact, const MeanFieldState& state);

struct MeanFieldRunOptions {
  double dt = 1e-3;
  double total_time = 1.0;
  DriveScale drive = {};               // coupling scale s(t); {} = constant 1
  DriveScale drive_rate = {};          // ds/dt, for <dV/dt> bookkeeping
  bool record_snapshots = false;       // keep phi_j for variational checks
  PropagatorConfig propagator = {};
};

struct MeanFieldRun {
  TrajectoryRecord traj;
  MeanFieldState final_state;
};

// Steps the pair over [t0, t0+T] recording lambda, Lambda, script-E, step
// overlaps, drive power, and (for grid specs) momentum / center of mass /
// lattice force series.
MeanFieldRun run_meanfield(const HamiltonianSpec& spec, const MeanFieldState& initial,
                           const MeanFieldRunOptions& opts);

}  // namespace branchsim
