#include <doctest.h>

#include "branchsim/hamiltonian.hpp"
#include "branchsim/oracles.hpp"
#include "support.hpp"

using namespace branchsim;
using namespace testsupport;

TEST_CASE("build_grid_pair decoupled limit has no interaction terms") {
  GridPairParams p;
  p.n_a = 4;
  p.n_b = 4;
  p.q_product = 0.0;
  const HamiltonianSpec spec = build_grid_pair(p);
  CHECK(spec.interaction.empty());
  const Operator joint = spec.assemble_joint();
  CHECK((joint - oracles::brute_force_joint(spec)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("build_grid_pair two-point grid matches hand arithmetic") {
  GridPairParams p;
  p.n_a = 2;
  p.n_b = 2;
  p.q_product = 0.7;
  p.softening = 1.0;
  p.spacing = 1.0;
  const HamiltonianSpec spec = build_grid_pair(p);
  const Operator h_int = spec.interaction_joint();
  // |dx| between the two-point grids is 0 on the diagonal pairs, 1 otherwise
  CHECK(std::abs(h_int(0, 0) - Complex(0.7 / 1.0)) < 1e-12);
  CHECK(std::abs(h_int(1, 1) - Complex(0.7 / 2.0)) < 1e-12);
  CHECK(std::abs(h_int(2, 2) - Complex(0.7 / 2.0)) < 1e-12);
  CHECK(std::abs(h_int(3, 3) - Complex(0.7 / 1.0)) < 1e-12);
}

TEST_CASE("build_grid_pair softened-Coulomb assembly matches the dense oracle") {
  GridPairParams p;
  p.n_a = 16;
  p.n_b = 16;
  p.q_product = -0.4;
  p.softening = 0.8;
  const HamiltonianSpec spec = build_grid_pair(p);
  const Operator joint = spec.assemble_joint();
  CHECK(is_hermitian(joint, 1e-12));
  CHECK((joint - oracles::brute_force_joint(spec)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("build_grid_pair rejects a vanishing softening") {
  GridPairParams p;
  p.softening = 0.0;
  p.q_product = 1.0;
  CHECK_THROWS_AS(build_grid_pair(p), SingularPotential);
}

TEST_CASE("dephasing model with one uncoupled qubit is block diagonal") {
  const HamiltonianSpec spec = build_dephasing_model(1, {0.0}, 0.3 * pauli_z());
  const Operator joint = spec.assemble_joint();
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(joint(i, j)) < 1e-15);
}

TEST_CASE("dephasing model eigenvalues match the sigma-z string enumeration") {
  const HamiltonianSpec spec = build_dephasing_model(2, {1.0, 1.0}, Operator::Zero(2, 2));
  const Operator joint = spec.assemble_joint();
  Eigen::SelfAdjointEigenSolver<Operator> es(joint);
  std::vector<double> want = {-2, -2, 0, 0, 0, 0, 2, 2};
  for (int i = 0; i < 8; ++i) CHECK(es.eigenvalues()[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("dephasing model is Hermitian for random couplings") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const HamiltonianSpec spec =
      build_dephasing_model(3, {u(rng), u(rng), u(rng)}, 0.7 * pauli_x() + 0.1 * pauli_z());
  CHECK(is_hermitian(spec.assemble_joint(), 1e-12));
}

TEST_CASE("dephasing model capacity limit") {
  std::vector<double> gs(12, 0.1);
  CHECK_THROWS_AS(build_dephasing_model(12, gs, Operator::Zero(2, 2), 4096), CapacityExceeded);
}

TEST_CASE("mean_field_potential on sigma-z eigenstates") {
  const HamiltonianSpec spec = build_dephasing_model(1, {0.9}, Operator::Zero(2, 2));
  // bath |0>: <sigma_z> = +1 -> V = g sigma_z
  const Operator v0 = mean_field_potential(spec, qubit(1, 0)).v;
  CHECK((v0 - Operator(0.9 * pauli_z())).cwiseAbs().maxCoeff() < 1e-14);
  // bath |+>: <sigma_z> = 0 -> V = 0
  const double s = 1.0 / std::sqrt(2.0);
  const Operator vp = mean_field_potential(spec, qubit(s, s)).v;
  CHECK(vp.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mean_field_potential rejects an unnormalized state") {
  const HamiltonianSpec spec = build_dephasing_model(1, {0.5}, Operator::Zero(2, 2));
  StateVector bad(2);
  bad << 1.0, 1.0;  // norm sqrt(2)
  CHECK_THROWS_AS(mean_field_potential(spec, bad), NormError);
}

TEST_CASE("mean_field_potential matches the joint-matrix contraction oracle") {
  std::mt19937_64 rng(32);
  const HamiltonianSpec spec = random_spec(4, 5, 3, rng);
  const StateVector psi = random_state(5, rng);
  const Operator got = mean_field_potential(spec, psi).v;
  // oracle: contract the dense joint interaction against |psi|^2 structure
  const Operator h_int = spec.interaction_joint();
  Operator want = Operator::Zero(4, 4);
  for (Eigen::Index a1 = 0; a1 < 4; ++a1)
    for (Eigen::Index a2 = 0; a2 < 4; ++a2) {
      Complex acc(0, 0);
      for (Eigen::Index b1 = 0; b1 < 5; ++b1)
        for (Eigen::Index b2 = 0; b2 < 5; ++b2)
          acc += std::conj(psi[b1]) * h_int(a1 * 5 + b1, a2 * 5 + b2) * psi[b2];
      want(a1, a2) = acc;
    }
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(is_hermitian(got, 1e-12));
}

TEST_CASE("mean field potentials give consistent expectation triplet") {
  std::mt19937_64 rng(33);
  for (int s = 0; s < 8; ++s) {
    const HamiltonianSpec spec = random_spec(3, 4, 2, rng);
    const StateVector phi = random_state(3, rng), psi = random_state(4, rng);
    const double via_a = (phi.adjoint() * mean_field_potential(spec, psi).v * phi).value().real();
    const double via_b =
        (psi.adjoint() * mean_field_potential_b(spec, phi).v * psi).value().real();
    const StateVector joint = tensor_product(phi, psi);
    const double via_joint =
        (joint.adjoint() * spec.interaction_joint() * joint).value().real();
    CHECK(std::abs(via_a - via_joint) < 1e-10);
    CHECK(std::abs(via_b - via_joint) < 1e-10);
  }
}

TEST_CASE("coupling scale multiplies the potential exactly") {
  std::mt19937_64 rng(34);
  const HamiltonianSpec spec = random_spec(3, 4, 2, rng);
  const StateVector psi = random_state(4, rng);
  const Operator v1 = mean_field_potential(spec, psi, 0.0, 1.0).v;
  const Operator v3 = mean_field_potential(spec, psi, 0.0, 3.0).v;
  CHECK((v3 - 3.0 * v1).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("apply_joint agrees with the assembled matrix") {
  std::mt19937_64 rng(35);
  const HamiltonianSpec spec = random_spec(3, 5, 2, rng);
  const StateVector x = random_state(15, rng);
  const StateVector got = spec.apply_joint(x);
  const StateVector want = spec.assemble_joint() * x;
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("apply_joint diagonal fast paths agree with dense") {
  const HamiltonianSpec spec = build_dephasing_model(3, {0.2, 0.4, 0.1}, 0.5 * pauli_x());
  std::mt19937_64 rng(36);
  const StateVector x = random_state(16, rng);
  CHECK((spec.apply_joint(x) - spec.assemble_joint() * x).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("external grid spec reproduces the potential as mean field") {
  Grid1D grid{8, 0.5, 1.0, Boundary::Periodic, KineticKind::SecondDifference};
  Eigen::VectorXd v(8);
  for (int i = 0; i < 8; ++i) v[i] = 0.1 * i;
  const HamiltonianSpec spec = build_external_grid(grid, v);
  const Operator got = mean_field_potential(spec, StateVector::Ones(1)).v;
  for (int i = 0; i < 8; ++i) CHECK(got(i, i).real() == doctest::Approx(v[i]));
}

TEST_CASE("grid momentum operator on a plane wave has the lattice dispersion") {
  const Eigen::Index n = 32;
  Grid1D grid{n, 0.4, 1.0, Boundary::Periodic, KineticKind::SecondDifference};
  const double length = double(n) * grid.spacing;
  const double k = 2.0 * M_PI * 3.0 / length;  // one lattice momentum
  StateVector phi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double arg = k * grid.x(i);
    phi[i] = Complex(std::cos(arg), std::sin(arg));
  }
  phi.normalize();
  const Operator p = grid_momentum(grid, 1.0);
  const double got = (phi.adjoint() * p * phi).value().real();
  CHECK(got == doctest::Approx(std::sin(k * grid.spacing) / grid.spacing).epsilon(1e-10));
}
