#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "branchsim/errors.hpp"

namespace branchsim {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using Operator = Eigen::MatrixXcd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kNormTol = 1e-8;
inline constexpr double kBasisGramTol = 1e-8;
inline constexpr Eigen::Index kDefaultMaxJointDim = 4096;

// Joint index convention: |a,b> -> a * dim_b + b (row-major, subsystem A slowest).
struct BipartiteSpace {
  Eigen::Index dim_a = 0;
  Eigen::Index dim_b = 0;

  Eigen::Index joint_dim() const { return dim_a * dim_b; }
  Eigen::Index joint_index(Eigen::Index a, Eigen::Index b) const { return a * dim_b + b; }
};

// Row-major view of a joint state as a dim_a x dim_b matrix, so that
// (hA (x) I) phi = hA * X and (I (x) hB) phi = X * hB^T.
using JointMatrixView =
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using JointMatrixViewMut =
    Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline JointMatrixView as_matrix(const StateVector& joint, const BipartiteSpace& space) {
  if (joint.size() != space.joint_dim())
    throw ShapeError("joint state size does not match bipartite space");
  return JointMatrixView(joint.data(), space.dim_a, space.dim_b);
}

bool is_normalized(const StateVector& v, double tol = kNormTol);
bool is_hermitian(const Operator& op, double tol = kHermitianTol);
void require_hermitian(const Operator& op, const char* what, double tol = kHermitianTol);
void require_unit_norm(const StateVector& v, const char* what, double tol = kNormTol);

// Kronecker product of states, A slowest. Throws CapacityExceeded past max_joint_dim.
StateVector tensor_product(const StateVector& a, const StateVector& b,
                           Eigen::Index max_joint_dim = kDefaultMaxJointDim);

// phi~(a) = sum_b conj(psi(b)) * joint(a,b); linear in joint, antilinear in psi.
StateVector contract_b(const StateVector& joint, const BipartiteSpace& space,
                       const StateVector& psi);

// Mirror contraction over the A factor: psi~(b) = sum_a conj(phi(a)) * joint(a,b).
StateVector contract_a(const StateVector& joint, const BipartiteSpace& space,
                       const StateVector& phi);

// <a|b> with the physics convention (antilinear in the first argument).
Complex overlap(const StateVector& a, const StateVector& b);

// Reduced density matrix of subsystem A expressed in basis_a:
// rho[i][j] = sum_b <i,b|Phi> <Phi|j,b>. Requires basis_a orthonormal.
Operator reduced_coherence(const StateVector& joint, const BipartiteSpace& space,
                           const std::vector<StateVector>& basis_a);

double purity(const Operator& rho);

// Largest off-diagonal modulus of a density matrix (decoherence diagnostic).
double max_offdiagonal(const Operator& rho);

}  // namespace branchsim
