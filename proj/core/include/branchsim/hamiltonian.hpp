#pragma once

#include <optional>
#include <vector>

#include "branchsim/hilbert.hpp"

namespace branchsim {

// One product term g * A (x) B of the interaction.
struct ProductTerm {
  Operator op_a;     // Hermitian, acts on subsystem A
  Operator op_b;     // Hermitian, acts on subsystem B
  double coupling = 0.0;

  // structure cache filled by HamiltonianSpec::compile()
  bool a_diagonal = false;
  bool b_diagonal = false;
  Eigen::VectorXcd a_diag;
  Eigen::VectorXcd b_diag;
};

enum class Boundary { Dirichlet, Periodic };
enum class KineticKind { SecondDifference, Spectral };

// Metadata for a 1D position-grid factor. x_i = (i - (n-1)/2) * spacing.
struct Grid1D {
  Eigen::Index n = 0;
  double spacing = 1.0;
  double mass = 1.0;
  Boundary boundary = Boundary::Dirichlet;
  KineticKind kinetic = KineticKind::SecondDifference;

  double x(Eigen::Index i) const { return (double(i) - 0.5 * double(n - 1)) * spacing; }
  Eigen::VectorXd positions() const;
};

// H = hA (x) I + I (x) hB + sum_k g_k A_k (x) B_k.
struct HamiltonianSpec {
  Operator h_a;
  Operator h_b;
  std::vector<ProductTerm> interaction;
  double hbar = 1.0;
  std::optional<Grid1D> grid_a;
  std::optional<Grid1D> grid_b;

  Eigen::Index dim_a() const { return h_a.rows(); }
  Eigen::Index dim_b() const { return h_b.rows(); }
  BipartiteSpace space() const { return {dim_a(), dim_b()}; }

  // Dense assembly of the full joint operator (desk-scale only).
  Operator assemble_joint(Eigen::Index max_joint_dim = kDefaultMaxJointDim) const;
  Operator interaction_joint(Eigen::Index max_joint_dim = kDefaultMaxJointDim) const;

  // y = H x applied through the product structure (no joint assembly).
  // `scale` multiplies every interaction coupling (used by drives).
  StateVector apply_joint(const StateVector& joint, double scale = 1.0) const;

  void validate() const;  // Hermiticity of all blocks
  void compile();         // detect diagonal factors, cache them
  bool compiled = false;
  bool h_a_zero = false;
  bool h_b_zero = false;
};

struct EffectivePotential {
  Operator v;        // Hermitian operator on one subsystem
  double time = 0.0;
};

// Kinetic-energy operator for a 1D grid (second-difference Laplacian or the
// torus-exact spectral form), with the grid's boundary condition.
Operator grid_kinetic(const Grid1D& grid, double hbar);

// Central-difference derivative operator (periodic wrap or one-sided rows at
// hard walls); p = (hbar / i) * D.
Operator grid_derivative(const Grid1D& grid);
Operator grid_momentum(const Grid1D& grid, double hbar);

struct GridPairParams {
  Eigen::Index n_a = 2;
  Eigen::Index n_b = 2;
  double mass_a = 1.0;
  double mass_b = 1.0;
  double q_product = 0.0;   // q_i * q_j of the softened Coulomb pair term
  double softening = 1.0;   // length; must be > 0
  double spacing = 1.0;
  Boundary boundary = Boundary::Dirichlet;
  double hbar = 1.0;
  double trap_omega_a = 0.0;  // optional harmonic confinement added to hA
  double trap_omega_b = 0.0;
  Eigen::Index max_joint_dim = kDefaultMaxJointDim;
};

// Two distinguishable particles on 1D grids with a softened Coulomb coupling
// q_product / (|x - y| + softening). The coupling matrix is factored exactly
// into diagonal product terms (SVD), so the interaction stays in sum-of-products form.
HamiltonianSpec build_grid_pair(const GridPairParams& p);

// System qubit coupled to K bath qubits: h_int = sigma_z (x) sum_k g_k sigma_z^(k).
// Bath self-Hamiltonian is zero; the system Hamiltonian is the given 2x2 operator.
HamiltonianSpec build_dephasing_model(int bath_qubits, const std::vector<double>& couplings,
                                      const Operator& system_hamiltonian,
                                      Eigen::Index max_joint_dim = kDefaultMaxJointDim);

// Effective field on A from tracing the interaction against |psi|^2:
// V = sum_k g_k <psi|B_k|psi> A_k.  `scale` multiplies all couplings.
EffectivePotential mean_field_potential(const HamiltonianSpec& spec, const StateVector& psi,
                                        double time = 0.0, double scale = 1.0);

// Mirror field on B: V_B = sum_k g_k <phi|A_k|phi> B_k.
EffectivePotential mean_field_potential_b(const HamiltonianSpec& spec, const StateVector& phi,
                                          double time = 0.0, double scale = 1.0);

// Single particle on a grid in an external potential, realized as a bipartite
// spec with a trivial one-dimensional B factor carrying the potential as the
// interaction term. Keeps the dissipation bookkeeping (lambda = <V>) intact.
HamiltonianSpec build_external_grid(const Grid1D& grid, const Eigen::VectorXd& potential,
                                    double hbar = 1.0);

// sigma matrices used by the qubit builders and tests.
Operator pauli_x();
Operator pauli_y();
Operator pauli_z();

// <v|A_k|v> and <v|B_k|v> using the compiled diagonal when available.
Complex term_expect_a(const ProductTerm& term, const StateVector& v);
Complex term_expect_b(const ProductTerm& term, const StateVector& v);

}  // namespace branchsim
