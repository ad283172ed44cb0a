#pragma once

#include "branchsim/meanfield.hpp"

namespace branchsim {

enum class WeightMode { ModSquared, Amplitude };

struct Branch {
  int nu = 0;
  Complex alpha{0.0, 0.0};   // fixed at initialization, never re-fit
  MeanFieldState state;
};

// Per-branch recorded series, filled when evolve_branches records history.
struct BranchHistory {
  std::vector<double> times;
  std::vector<std::vector<double>> lambda;   // [branch][sample]
  std::vector<std::vector<double>> Lambda;
};

struct BranchEnsemble {
  std::vector<Branch> branches;
  double hbar = 1.0;
  WeightMode weight_mode = WeightMode::ModSquared;
  double last_dt = 0.0;       // set by evolve_branches; sync tolerance = dt/2
  BranchHistory history;      // populated when recording is on

  std::size_t size() const { return branches.size(); }
  double weight(std::size_t i) const;
  double common_time() const;  // throws SyncError if branches drifted apart
  double weight_sum() const;
};

// Branch nu starts from (basis_a[nu], psi0) with alpha_nu = <chi_nu (x) psi0, phi0>.
BranchEnsemble init_branches(const StateVector& phi0_joint, const BipartiteSpace& space,
                             const std::vector<StateVector>& basis_a, const StateVector& psi0,
                             double hbar = 1.0, WeightMode mode = WeightMode::ModSquared);

// Advances every branch by `steps` TDH steps of size dt. Branches are an
// independent map: results are identical for any worker count. Errors from a
// branch propagate tagged with its index.
void evolve_branches(BranchEnsemble& ens, const HamiltonianSpec& spec, double dt, int steps,
                     const PropagatorConfig& cfg = {}, bool record_history = false,
                     int max_workers = 0);

// Omega[nu'][nu] = <Psi_nu', Psi_nu>; unit diagonal for normalized baths.
Operator offdiagonal_overlaps(const BranchEnsemble& ens);
double max_offdiagonal_overlap(const BranchEnsemble& ens);

// K = sum_nu w_nu exp(i Lambda_nu / hbar). Weights must be non-negative.
Complex interference_kernel(const std::vector<double>& weights,
                            const std::vector<double>& Lambdas, double hbar);

// phi = sum_nu w_nu phi_nu exp(i Lambda_nu / hbar), not renormalized.
StateVector partial_wave(const BranchEnsemble& ens);

struct PhaseSpread {
  double density = 0.0;      // median consecutive gap |Lambda_{nu+1}-Lambda_nu| / hbar
  double spread_rate = 0.0;  // (max Lambda - min Lambda) / (hbar * t); 0 at t = 0
};

PhaseSpread phase_spread(const BranchEnsemble& ens);

struct SelectionDiagnostics {
  std::vector<double> stationarity;   // |Lambda_{nu+1} - Lambda_{nu-1}| profile
  std::vector<double> Lambdas;
  std::vector<double> weights;
  int nu_c = 0;
};

// Discrete stationary phase: nu_c = argmin of the central-difference
// stationarity profile (one-sided, x2, at the ends). Ties break toward the
// larger weight, then the lower index.
SelectionDiagnostics select_dominant(const BranchEnsemble& ens, double t);

enum class BasisKind { Pointer, Energy };

// Pointer basis = computational/position basis of A; energy basis = eigenvectors of hA.
std::vector<StateVector> make_branch_basis(const HamiltonianSpec& spec, BasisKind kind);

}  // namespace branchsim
