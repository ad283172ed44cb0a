#pragma once

#include <random>
#include <string>

#include "branchsim/hamiltonian.hpp"

namespace branchsim {
// Brute-force reference implementations for cross-checks. These deliberately
// share no numerical kernels with the main propagation paths; duplication here
// is the point.
namespace oracles {

struct OracleReport {
  std::string name;
  double max_abs_error = 0.0;
  double threshold = 0.0;
  long samples = 0;
  unsigned long seed = 0;
  bool passed = false;
};

// exp(-i H t / hbar) phi0 through a full eigendecomposition. dim <= 4096.
StateVector dense_propagate(const StateVector& phi0, const Operator& h, double t,
                            double hbar = 1.0, Eigen::Index max_dim = kDefaultMaxJointDim);

// Bath-factor overlap <Psi_-(t), Psi_+(t)> for sigma_z branches of the
// dephasing model, evaluated per qubit in closed form. `bath_qubit_states`
// holds each qubit's initial 2-vector.
Complex dephasing_closed_form(const std::vector<double>& couplings,
                              const std::vector<StateVector>& bath_qubit_states, double t,
                              double hbar = 1.0);

// argmax over window centers of |sum_window w_nu exp(i Lambda_nu / hbar)|.
// Window must be odd and >= 3. Ties keep the lowest center.
int windowed_kernel_argmax(const std::vector<double>& weights,
                           const std::vector<double>& Lambdas, double hbar, int window);

// Deterministic family of smooth phase profiles (dominant quadratic well plus
// a gentle cubic tilt and low-frequency ripple) used to compare the two
// branch-selection criteria.
std::vector<double> random_smooth_profile(int n_branches, std::mt19937_64& rng, double hbar);

// Kahan-compensated inner product, used as the summation-order oracle.
Complex kahan_overlap(const StateVector& a, const StateVector& b);

// Independent dense partial trace (double loop over explicit joint indices).
Operator brute_force_partial_trace_a(const StateVector& joint, const BipartiteSpace& space);

// Element-wise dense assembly of hA (x) I + I (x) hB + sum g A (x) B.
Operator brute_force_joint(const HamiltonianSpec& spec);

// The full cross-check battery behind `branchsim check`. `filter` is a
// substring match on report names; empty runs everything.
std::vector<OracleReport> run_battery(const std::string& filter = "");

}  // namespace oracles
}  // namespace branchsim
