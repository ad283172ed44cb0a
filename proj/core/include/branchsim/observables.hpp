#pragma once

#include <functional>

#include "branchsim/meanfield.hpp"

namespace branchsim {

struct ClassicalState {
  double q = 0.0;
  double p = 0.0;
  double mass = 1.0;
};

// <phi| (hbar/i) d/dx |phi> with the grid's derivative stencil. The imaginary
// residue is checked (< 1e-8) and discarded.
double momentum_expectation(const StateVector& phi, const Grid1D& grid, double hbar);

// Same check against a prebuilt momentum operator (hot loops).
double momentum_with_operator(const StateVector& phi, const Operator& p_op);

double center_of_mass(const StateVector& phi, const Grid1D& grid);

// Lattice Ehrenfest force -sum_i (V_{i+1}-V_i)/dx * Re[conj(phi_i) phi_{i+1}]:
// the discrete pairing for which dp/dt = F holds exactly on periodic grids.
double lattice_force(const StateVector& phi, const Eigen::VectorXd& potential_diag,
                     const Grid1D& grid);

// Commutator form (i/hbar) <[V, p]> paired with a given momentum operator;
// the exact discrete force for spectral grids.
double commutator_force(const StateVector& phi, const Eigen::VectorXd& potential_diag,
                        const Operator& p_op, double hbar);

// Momentum dispersion <p^2> - <p>^2, with <p^2> = 2 m <T>.
double momentum_dispersion(const StateVector& phi, const Grid1D& grid, double hbar);

// max over interior samples of |dp/dt (central difference) - F(t)|.
double newton_residual(const TrajectoryRecord& traj);

struct EnergyLedger {
  double residual = 0.0;   // |dE + dLambda' - int <dV/dt> dt| over the span
  double heat_out = 0.0;   // lambda(t2) - lambda(t1)
};

// First-law balance over the full recorded span. Requires lambda and energy
// series; drive_power may be empty (static V).
EnergyLedger energy_ledger(const TrajectoryRecord& traj);

// S = int <varphi| L varphi> dt over the interior sample span, with the time
// derivative taken by centered differences of the recorded overlaps (not from
// the equation of motion). Along solutions S equals the Lambda increment over
// the same span to O(dt^2).
double action_value(const TrajectoryRecord& traj, double hbar);

// |S - (Lambda(t2) - Lambda(t1))| over the interior span used by action_value.
double action_dissipation_residual(const TrajectoryRecord& traj, double hbar);

// Directional first-variation ratio |S_c[phi + eps*delta] - S_c[phi]| / eps of
// the norm-constrained action, with delta(t) = envelope(t) * direction and the
// envelope vanishing at both ends. Needs phi snapshots and a static effective
// Hamiltonian h = h_A + V(psi_0).
double stationarity_check(const TrajectoryRecord& traj, const HamiltonianSpec& spec,
                          double epsilon, const StateVector& direction,
                          const std::vector<double>& envelope = {});

std::vector<ClassicalState> ehrenfest_trajectory(const TrajectoryRecord& traj, double mass);

using Potential1D = std::function<double(double q)>;

// Leapfrog (kick-drift-kick) integration of q' = p/M, p' = -V'(q).
// The force defaults to a central difference of V.
std::vector<ClassicalState> classical_oracle(const ClassicalState& initial,
                                             const Potential1D& potential, double total_time,
                                             double dt, const Potential1D& force = {});

struct TranslationBalance {
  double boundary_term = 0.0;  // p_x between the endpoints
  double bulk_term = 0.0;      // int dt <dV/dx> with the lattice pairing
};

// Momentum balance of the x -> x + dx shift argument; defined on periodic
// grids only (throws TopologyError otherwise). boundary + bulk -> 0 at the
// integrator's order.
TranslationBalance translation_decomposition(const TrajectoryRecord& traj, const Grid1D& grid,
                                             double delta_x);

}  // namespace branchsim
