#include <doctest.h>

#include "branchsim/oracles.hpp"
#include "branchsim/propagate.hpp"
#include "support.hpp"

using namespace branchsim;
using namespace testsupport;

TEST_CASE("step_exact with a scalar Hamiltonian applies a global phase") {
  const double e = 0.7, dt = 0.3;
  PropagatorConfig cfg;
  cfg.dt = dt;
  const StateVector phi = qubit(0.6, 0.8);
  const StateVector out = step_exact(phi, e * Operator::Identity(2, 2), cfg);
  const Complex phase(std::cos(-e * dt), std::sin(-e * dt));
  CHECK((out - phase * phi).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("two-level free precession returns after one period") {
  const double omega = 1.3;
  const Operator h = 0.5 * omega * pauli_z();
  PropagatorConfig cfg;
  cfg.dt = 2.0 * M_PI / omega / 100.0;
  StateVector phi = qubit(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
  StateVector state = phi;
  for (int s = 0; s < 100; ++s) state = step_exact(state, h, cfg);
  CHECK(std::norm(overlap(phi, state)) >= 1.0 - 1e-8);
}

TEST_CASE("step_exact matches the dense diagonalization oracle") {
  std::mt19937_64 rng(41);
  const Operator h = random_hermitian(16, rng, 2.0);
  const StateVector phi = random_state(16, rng);
  PropagatorConfig cfg;
  cfg.dt = 0.05;
  StateVector state = phi;
  for (int s = 0; s < 20; ++s) state = step_exact(state, h, cfg);
  const StateVector want = oracles::dense_propagate(phi, h, 1.0);
  CHECK(std::norm(overlap(want, state)) >= 1.0 - 1e-9);
}

TEST_CASE("step_exact composes: two half steps equal one full step") {
  std::mt19937_64 rng(42);
  const Operator h = random_hermitian(12, rng, 1.5);
  const StateVector phi = random_state(12, rng);
  PropagatorConfig full, half;
  full.dt = 0.2;
  half.dt = 0.1;
  const StateVector one = step_exact(phi, h, full);
  const StateVector two = step_exact(step_exact(phi, h, half), h, half);
  CHECK((one - two).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("step_exact rejects non-Hermitian operators and bad norms") {
  Operator bad(2, 2);
  bad << 0, 1, 0, 0;
  PropagatorConfig cfg;
  CHECK_THROWS_AS(step_exact(qubit(1, 0), bad, cfg), OperatorError);
  StateVector unnorm(2);
  unnorm << 1.0, 1.0;
  CHECK_THROWS_AS(step_exact(unnorm, Operator::Identity(2, 2), cfg), NormError);
}

TEST_CASE("evolve with zero time returns the initial snapshot only") {
  PropagatorConfig cfg;
  const TrajectoryRecord traj = evolve(qubit(1, 0), pauli_z(), 0.0, cfg);
  CHECK(traj.size() == 1);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.norms.front() == doctest::Approx(1.0));
}

TEST_CASE("evolve invokes observers at every sample") {
  PropagatorConfig cfg;
  cfg.dt = 0.1;
  int calls = 0;
  std::vector<StepObserver> obs = {[&](double, const StateVector&) { ++calls; }};
  const TrajectoryRecord traj = evolve(qubit(1, 0), pauli_z(), 1.0, cfg, obs);
  CHECK(traj.size() == 11);
  CHECK(calls == 11);
}

TEST_CASE("decoupled joint evolution factorizes into independent factors") {
  std::mt19937_64 rng(43);
  HamiltonianSpec spec = random_spec(4, 5, 0, rng);  // g = 0
  const StateVector phi = random_state(4, rng), psi = random_state(5, rng);
  PropagatorConfig cfg;
  cfg.dt = 1e-2;
  const double t_total = 2.0;
  JointPropagator prop(spec, cfg);
  StateVector joint = tensor_product(phi, psi);
  for (int s = 0; s < 200; ++s) joint = prop.step(joint);
  const StateVector phi_t = oracles::dense_propagate(phi, spec.h_a, t_total);
  const StateVector psi_t = oracles::dense_propagate(psi, spec.h_b, t_total);
  CHECK(std::norm(overlap(tensor_product(phi_t, psi_t), joint)) >= 1.0 - 1e-9);
}

TEST_CASE("joint Krylov run tracks the dense oracle step for step (dephasing K=2)") {
  const HamiltonianSpec spec = build_dephasing_model(2, {0.3, 0.2}, 0.4 * pauli_x());
  const double s = 1.0 / std::sqrt(2.0);
  const StateVector psi0 = tensor_product(qubit(s, s), qubit(s, s));
  const StateVector joint0 = tensor_product(qubit(s, s), psi0);
  StateVector joint = joint0;
  const Operator dense = spec.assemble_joint();
  PropagatorConfig cfg;
  cfg.dt = 1e-2;
  JointPropagator prop(spec, cfg);
  const auto basis = pointer_basis(2);
  for (int step = 1; step <= 100; ++step) {
    joint = prop.step(joint);
    if (step % 20 == 0) {
      const StateVector want = oracles::dense_propagate(joint0, dense, step * cfg.dt);
      const Operator rho_got = reduced_coherence(joint, spec.space(), basis);
      const Operator rho_want = reduced_coherence(want, spec.space(), basis);
      CHECK(std::abs(rho_got.trace().real() - rho_want.trace().real()) < 1e-9);
      CHECK((rho_got - rho_want).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("unitarity holds over a long run") {
  std::mt19937_64 rng(44);
  const Operator h = random_hermitian(32, rng, 2.0);
  PropagatorConfig cfg;
  cfg.dt = 1e-2;
  const TrajectoryRecord traj = evolve(random_state(32, rng), h, 5.0, cfg);
  for (double n : traj.norms) CHECK(std::abs(n - 1.0) < 1e-8);
}

TEST_CASE("energy is conserved for a time-independent Hamiltonian") {
  std::mt19937_64 rng(45);
  const Operator h = random_hermitian(24, rng, 1.5);
  StateVector state = random_state(24, rng);
  const double e0 = (state.adjoint() * h * state).value().real();
  PropagatorConfig cfg;
  cfg.dt = 1e-2;
  for (int s = 0; s < 300; ++s) state = step_exact(state, h, cfg);
  const double e1 = (state.adjoint() * h * state).value().real();
  CHECK(std::abs(e1 - e0) / std::max(1.0, std::abs(e0)) < 1e-8);
}

TEST_CASE("split method is second order: halving dt cuts the error ~4x") {
  // grid pair: kinetic and Coulomb terms do not commute
  GridPairParams p;
  p.n_a = 12;
  p.n_b = 12;
  p.q_product = 1.0;
  p.softening = 1.0;
  p.spacing = 0.7;
  const HamiltonianSpec spec = build_grid_pair(p);
  std::mt19937_64 rng(46);
  const StateVector phi = random_state(12, rng), psi = random_state(12, rng);
  const StateVector joint0 = tensor_product(phi, psi);
  const double t_total = 0.8;
  const StateVector exact = oracles::dense_propagate(joint0, spec.assemble_joint(), t_total);

  auto run_split = [&](double dt) {
    PropagatorConfig cfg;
    cfg.dt = dt;
    cfg.method = Method::SplitSecondOrder;
    JointPropagator prop(spec, cfg);
    StateVector j = joint0;
    const long steps = std::lround(t_total / dt);
    for (long s = 0; s < steps; ++s) j = prop.step(j);
    return (j - exact).norm();
  };
  const double err_h = run_split(2e-2);
  const double err_h2 = run_split(1e-2);
  CHECK(err_h / err_h2 >= 3.5);
  CHECK(err_h / err_h2 <= 4.5);
}

TEST_CASE("split and Krylov methods agree at small dt") {
  const HamiltonianSpec spec = build_dephasing_model(3, {0.3, 0.1, 0.25}, 0.6 * pauli_x());
  const double s = 1.0 / std::sqrt(2.0);
  StateVector bath = qubit(s, s);
  bath = tensor_product(tensor_product(bath, qubit(s, s)), qubit(s, s));
  const StateVector joint0 = tensor_product(qubit(s, s), bath);
  PropagatorConfig kry, spl;
  kry.dt = spl.dt = 1e-3;
  spl.method = Method::SplitSecondOrder;
  JointPropagator pk(spec, kry), ps(spec, spl);
  StateVector a = joint0, b = joint0;
  for (int step = 0; step < 200; ++step) {
    a = pk.step(a);
    b = ps.step(b);
  }
  CHECK((a - b).norm() < 1e-6);
}
