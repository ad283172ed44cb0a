#pragma once

#include <functional>

#include "branchsim/hamiltonian.hpp"
#include "branchsim/trajectory.hpp"

namespace branchsim {

enum class Method { Krylov, SplitSecondOrder };

struct PropagatorConfig {
  double dt = 1e-3;
  Method method = Method::Krylov;
  double norm_tolerance_per_step = 1e-10;
  double krylov_tolerance = 1e-12;
  int krylov_dim = 40;
  double hbar = 1.0;
  Eigen::Index max_joint_dim = kDefaultMaxJointDim;

  void validate() const;
};

// y = exp(-i * tau * H) v for Hermitian H given as a matvec, via a Lanczos
// subspace with full reorthogonalization. Splits the step internally if the
// a-posteriori estimate misses `tol`.
StateVector krylov_expm_apply(const std::function<StateVector(const StateVector&)>& apply_h,
                              const StateVector& v, double tau, int max_dim = 40,
                              double tol = 1e-12, int depth = 0);

// Same for a dense Hermitian matrix; small dims short-circuit to an
// eigendecomposition.
StateVector expm_apply(const Operator& h, const StateVector& v, double tau, int krylov_dim = 40,
                       double tol = 1e-12);

// One step of exp(-i H dt / hbar) on a state, checking Hermiticity and norm.
StateVector step_exact(const StateVector& phi, const Operator& h, const PropagatorConfig& cfg);

using StepObserver = std::function<void(double t, const StateVector& state)>;

// Repeated stepping under a fixed H; observers fire at every sample including t = 0.
TrajectoryRecord evolve(const StateVector& phi0, const Operator& h, double total_time,
                        const PropagatorConfig& cfg,
                        const std::vector<StepObserver>& observers = {});

// Propagates a joint bipartite state under a HamiltonianSpec without assembling
// the joint matrix. Krylov uses the structured matvec; the split method is a
// Strang step  U0(dt/2) U1(dt) U0(dt/2)  between the separable part and the
// interaction (second order when the two do not commute).
class JointPropagator {
public:
  JointPropagator(const HamiltonianSpec& spec, const PropagatorConfig& cfg);

  StateVector step(const StateVector& joint) const;
  const PropagatorConfig& config() const { return cfg_; }

private:
  const HamiltonianSpec& spec_;
  PropagatorConfig cfg_;
  bool interaction_diagonal_ = false;
  // Split-method caches
  Operator u_a_half_;
  Operator u_b_half_;
  Eigen::VectorXcd diag_phase_;     // exp(-i diag(h_int) dt / hbar) when diagonal
  Operator u_int_;                  // dense interaction exponential otherwise
  bool split_ready_ = false;
  void prepare_split();
};

TrajectoryRecord evolve_joint(const StateVector& joint0, const HamiltonianSpec& spec,
                              double total_time, const PropagatorConfig& cfg,
                              const std::vector<StepObserver>& observers = {});

}  // namespace branchsim
