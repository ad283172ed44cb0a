#include "branchsim/hilbert.hpp"

#include <sstream>

namespace branchsim {

bool is_normalized(const StateVector& v, double tol) {
  return std::abs(v.norm() - 1.0) <= tol;
}

bool is_hermitian(const Operator& op, double tol) {
  if (op.rows() != op.cols()) return false;
  return (op - op.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

void require_hermitian(const Operator& op, const char* what, double tol) {
  if (!is_hermitian(op, tol)) {
    std::ostringstream msg;
    msg << what << " is not Hermitian within " << tol;
    throw OperatorError(msg.str());
  }
}

void require_unit_norm(const StateVector& v, const char* what, double tol) {
  if (!is_normalized(v, tol)) {
    std::ostringstream msg;
    msg << what << " must have unit norm (got " << v.norm() << ")";
    throw NormError(msg.str());
  }
}

StateVector tensor_product(const StateVector& a, const StateVector& b,
                           Eigen::Index max_joint_dim) {
  const Eigen::Index joint = a.size() * b.size();
  if (a.size() <= 0 || b.size() <= 0 || joint > max_joint_dim) {
    std::ostringstream msg;
    msg << "joint dimension " << a.size() << "x" << b.size() << " exceeds capacity "
        << max_joint_dim;
    throw CapacityExceeded(msg.str());
  }
  StateVector out(joint);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

StateVector contract_b(const StateVector& joint, const BipartiteSpace& space,
                       const StateVector& psi) {
  if (psi.size() != space.dim_b || joint.size() != space.joint_dim())
    throw ShapeError("contract_b: dimension mismatch");
  // phi~(a) = sum_b conj(psi_b) joint(a,b)
  return as_matrix(joint, space) * psi.conjugate();
}

StateVector contract_a(const StateVector& joint, const BipartiteSpace& space,
                       const StateVector& phi) {
  if (phi.size() != space.dim_a || joint.size() != space.joint_dim())
    throw ShapeError("contract_a: dimension mismatch");
  return as_matrix(joint, space).transpose() * phi.conjugate();
}

Complex overlap(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw ShapeError("overlap: dimension mismatch");
  return a.dot(b);  // Eigen's dot conjugates the first factor
}

Operator reduced_coherence(const StateVector& joint, const BipartiteSpace& space,
                           const std::vector<StateVector>& basis_a) {
  if (joint.size() != space.joint_dim())
    throw ShapeError("reduced_coherence: joint dimension mismatch");
  const auto n = static_cast<Eigen::Index>(basis_a.size());
  for (const auto& chi : basis_a)
    if (chi.size() != space.dim_a) throw ShapeError("reduced_coherence: basis dimension mismatch");
  // Gram check
  double gram_dev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex g = basis_a[i].dot(basis_a[j]);
      gram_dev = std::max(gram_dev, std::abs(g - (i == j ? Complex(1.0) : Complex(0.0))));
    }
  if (gram_dev > kBasisGramTol) {
    std::ostringstream msg;
    msg << "reduced_coherence: basis Gram deviation " << gram_dev;
    throw BasisError(msg.str());
  }

  // y_i(b) = <chi_i, joint(:,b)>; rho[i][j] = sum_b y_i(b) conj(y_j(b))
  const auto x = as_matrix(joint, space);
  Eigen::MatrixXcd y(n, space.dim_b);
  for (Eigen::Index i = 0; i < n; ++i) y.row(i) = basis_a[i].adjoint() * x;
  Operator rho = y * y.adjoint();
  return rho;
}

double purity(const Operator& rho) { return (rho * rho).trace().real(); }

double max_offdiagonal(const Operator& rho) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    for (Eigen::Index j = 0; j < rho.cols(); ++j)
      if (i != j) m = std::max(m, std::abs(rho(i, j)));
  return m;
}

}  // namespace branchsim
