#include <doctest.h>

#include "branchsim/hilbert.hpp"
#include "branchsim/oracles.hpp"
#include "support.hpp"

using namespace branchsim;
using namespace testsupport;

TEST_CASE("tensor_product basis vectors") {
  StateVector a = qubit(1, 0), b = qubit(0, 1);
  const StateVector j = tensor_product(a, b);
  CHECK(j.size() == 4);
  CHECK(std::abs(j[0]) == doctest::Approx(0.0));
  CHECK(std::abs(j[1] - Complex(1.0)) < 1e-15);
  CHECK(std::abs(j[2]) == doctest::Approx(0.0));
  CHECK(std::abs(j[3]) == doctest::Approx(0.0));
}

TEST_CASE("tensor_product is linear in the first slot") {
  const double s = 1.0 / std::sqrt(2.0);
  const StateVector j = tensor_product(qubit(s, s), qubit(1, 0));
  CHECK(std::abs(j[0] - Complex(s)) < 1e-15);
  CHECK(std::abs(j[1]) < 1e-15);
  CHECK(std::abs(j[2] - Complex(s)) < 1e-15);
  CHECK(std::abs(j[3]) < 1e-15);
}

TEST_CASE("tensor_product keeps unit norm (direct-summation oracle)") {
  std::mt19937_64 rng(21);
  for (int s = 0; s < 10; ++s) {
    const StateVector a = random_state(3, rng), b = random_state(4, rng);
    const StateVector j = tensor_product(a, b);
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < j.size(); ++i) norm2 += std::norm(j[i]);
    CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-12);
  }
}

TEST_CASE("tensor_product respects the capacity limit") {
  StateVector a = StateVector::Ones(80).normalized();
  StateVector b = StateVector::Ones(80).normalized();
  CHECK_THROWS_AS(tensor_product(a, b, 4096), CapacityExceeded);
}

TEST_CASE("contract_b recovers the A factor from a product") {
  std::mt19937_64 rng(22);
  const StateVector phi = random_state(5, rng), psi = random_state(3, rng);
  const StateVector j = tensor_product(phi, psi);
  const StateVector back = contract_b(j, {5, 3}, psi);
  CHECK((back - phi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("contract_b against an orthogonal bath state gives zero") {
  const StateVector phi = qubit(0.6, 0.8);
  const StateVector j = tensor_product(phi, qubit(1, 0));
  const StateVector z = contract_b(j, {2, 2}, qubit(0, 1));
  CHECK(z.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("contract_b equals the brute-force double loop") {
  std::mt19937_64 rng(23);
  const BipartiteSpace sp{4, 4};
  const StateVector joint = random_state(16, rng), psi = random_state(4, rng);
  const StateVector got = contract_b(joint, sp, psi);
  for (Eigen::Index a = 0; a < 4; ++a) {
    Complex want(0, 0);
    for (Eigen::Index b = 0; b < 4; ++b) want += std::conj(psi[b]) * joint[sp.joint_index(a, b)];
    CHECK(std::abs(got[a] - want) < 1e-14);
  }
}

TEST_CASE("contract_b is linear in the joint argument") {
  std::mt19937_64 rng(24);
  const BipartiteSpace sp{3, 4};
  const StateVector j1 = random_state(12, rng), j2 = random_state(12, rng);
  const StateVector psi = random_state(4, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Complex alpha(u(rng), u(rng)), beta(u(rng), u(rng));
  const StateVector lhs = contract_b(alpha * j1 + beta * j2, sp, psi);
  const StateVector rhs = alpha * contract_b(j1, sp, psi) + beta * contract_b(j2, sp, psi);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("contract_b shape errors") {
  CHECK_THROWS_AS(contract_b(StateVector::Ones(6), {2, 3}, StateVector::Ones(2)), ShapeError);
}

TEST_CASE("overlap basics and conjugate symmetry") {
  const StateVector e0 = basis_state(4, 0), e1 = basis_state(4, 1);
  CHECK(std::abs(overlap(e0, e0) - Complex(1.0)) < 1e-15);
  CHECK(std::abs(overlap(e0, e1)) < 1e-15);
  std::mt19937_64 rng(25);
  const StateVector a = random_state(8, rng), b = random_state(8, rng);
  CHECK(std::abs(overlap(a, b) - std::conj(overlap(b, a))) < 1e-14);
  CHECK(overlap(a, a).real() >= 0.0);
  CHECK(std::abs(overlap(a, b) - oracles::kahan_overlap(a, b)) < 1e-13);
  CHECK_THROWS_AS(overlap(a, StateVector::Ones(3)), ShapeError);
}

TEST_CASE("reduced_coherence of a product state is a pure projector") {
  std::mt19937_64 rng(26);
  const StateVector phi = random_state(3, rng), psi = random_state(5, rng);
  const StateVector j = tensor_product(phi, psi);
  const Operator rho = reduced_coherence(j, {3, 5}, pointer_basis(3));
  CHECK(purity(rho) == doctest::Approx(1.0).epsilon(1e-10));
  const Operator proj = phi * phi.adjoint();
  CHECK((rho - proj).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reduced_coherence of a Bell state is maximally mixed") {
  StateVector bell = StateVector::Zero(4);
  bell[0] = 1.0 / std::sqrt(2.0);
  bell[3] = 1.0 / std::sqrt(2.0);
  const Operator rho = reduced_coherence(bell, {2, 2}, pointer_basis(2));
  CHECK(std::abs(rho(0, 0) - Complex(0.5)) < 1e-14);
  CHECK(std::abs(rho(1, 1) - Complex(0.5)) < 1e-14);
  CHECK(std::abs(rho(0, 1)) < 1e-14);
}

TEST_CASE("reduced_coherence matches the dense partial-trace oracle") {
  std::mt19937_64 rng(27);
  const BipartiteSpace sp{4, 4};
  const StateVector j = random_state(16, rng);
  const Operator got = reduced_coherence(j, sp, pointer_basis(4));
  const Operator want = oracles::brute_force_partial_trace_a(j, sp);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((got - got.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(got.trace().real() - 1.0) < 1e-10);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(got(i, i).real() >= -1e-12);
}

TEST_CASE("reduced_coherence rejects a non-orthonormal basis") {
  std::vector<StateVector> bad = pointer_basis(2);
  bad[1] = (bad[0] + bad[1]).normalized();
  const StateVector j = tensor_product(qubit(1, 0), qubit(1, 0));
  CHECK_THROWS_AS(reduced_coherence(j, {2, 2}, bad), BasisError);
}

TEST_CASE("trace of the reduced matrix equals the squared joint norm") {
  std::mt19937_64 rng(28);
  for (int s = 0; s < 5; ++s) {
    StateVector j = random_state(12, rng);
    j *= 0.7;  // deliberately unnormalized
    const Operator rho = reduced_coherence(j, {3, 4}, pointer_basis(3));
    CHECK(std::abs(rho.trace().real() - j.squaredNorm()) < 1e-10);
  }
}

TEST_CASE("tensor then contract round trip is the identity on the A factor") {
  std::mt19937_64 rng(29);
  for (int s = 0; s < 10; ++s) {
    const StateVector phi = random_state(6, rng), psi = random_state(4, rng);
    const StateVector back = contract_b(tensor_product(phi, psi), {6, 4}, psi);
    CHECK((back - phi).cwiseAbs().maxCoeff() < 1e-12);
  }
}
