#pragma once

#include <random>

#include "branchsim/hamiltonian.hpp"

namespace testsupport {

using branchsim::Complex;
using branchsim::Operator;
using branchsim::StateVector;

inline StateVector random_state(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  StateVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = Complex(g(rng), g(rng));
  v.normalize();
  return v;
}

inline Operator random_hermitian(Eigen::Index dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Operator m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (m + m.adjoint()) * (scale / std::sqrt(double(dim)));
}

inline branchsim::HamiltonianSpec random_spec(Eigen::Index da, Eigen::Index db, int terms,
                                              std::mt19937_64& rng, double g_scale = 0.2) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  branchsim::HamiltonianSpec spec;
  spec.h_a = random_hermitian(da, rng);
  spec.h_b = random_hermitian(db, rng);
  for (int k = 0; k < terms; ++k) {
    branchsim::ProductTerm term;
    term.op_a = random_hermitian(da, rng);
    term.op_b = random_hermitian(db, rng);
    term.coupling = g_scale * u(rng);
    spec.interaction.push_back(std::move(term));
  }
  spec.validate();
  spec.compile();
  return spec;
}

inline StateVector basis_state(Eigen::Index dim, Eigen::Index i) {
  StateVector e = StateVector::Zero(dim);
  e[i] = 1.0;
  return e;
}

inline StateVector qubit(double c0, double c1) {
  StateVector v(2);
  v << c0, c1;
  v.normalize();
  return v;
}

inline std::vector<StateVector> pointer_basis(Eigen::Index dim) {
  std::vector<StateVector> basis;
  for (Eigen::Index i = 0; i < dim; ++i) basis.push_back(basis_state(dim, i));
  return basis;
}

}  // namespace testsupport
