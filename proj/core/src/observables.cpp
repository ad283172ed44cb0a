#include "branchsim/observables.hpp"

#include <cmath>
#include <sstream>

namespace branchsim {

namespace {

double checked_real(const Complex& z, const char* what, double tol = 1e-8) {
  if (std::abs(z.imag()) > tol) {
    std::ostringstream msg;
    msg << what << ": imaginary residue " << z.imag();
    throw HermiticityError(msg.str());
  }
  return z.real();
}

}  // namespace

double momentum_with_operator(const StateVector& phi, const Operator& p_op) {
  const Complex z = (phi.adjoint() * p_op * phi).value();
  return checked_real(z, "momentum");
}

double momentum_expectation(const StateVector& phi, const Grid1D& grid, double hbar) {
  if (phi.size() != grid.n) throw ShapeError("momentum_expectation: grid size mismatch");
  if (grid.kinetic == KineticKind::Spectral)
    return momentum_with_operator(phi, grid_momentum(grid, hbar));
  // central-difference stencil, one-sided at hard walls
  const Eigen::Index n = grid.n;
  const double dx = grid.spacing;
  Complex acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex dphi;
    if (i > 0 && i + 1 < n)
      dphi = (phi[i + 1] - phi[i - 1]) / (2.0 * dx);
    else if (grid.boundary == Boundary::Periodic)
      dphi = (phi[(i + 1) % n] - phi[(i + n - 1) % n]) / (2.0 * dx);
    else if (i == 0)
      dphi = (phi[1] - phi[0]) / dx;
    else
      dphi = (phi[n - 1] - phi[n - 2]) / dx;
    acc += std::conj(phi[i]) * Complex(0.0, -hbar) * dphi;
  }
  return checked_real(acc, "momentum");
}

double center_of_mass(const StateVector& phi, const Grid1D& grid) {
  if (phi.size() != grid.n) throw ShapeError("center_of_mass: grid size mismatch");
  double q = 0.0;
  for (Eigen::Index i = 0; i < grid.n; ++i) q += grid.x(i) * std::norm(phi[i]);
  return q;
}

double lattice_force(const StateVector& phi, const Eigen::VectorXd& potential_diag,
                     const Grid1D& grid) {
  if (phi.size() != grid.n || potential_diag.size() != grid.n)
    throw ShapeError("lattice_force: size mismatch");
  const Eigen::Index n = grid.n;
  const double dx = grid.spacing;
  double f = 0.0;
  const Eigen::Index bonds = (grid.boundary == Boundary::Periodic) ? n : n - 1;
  for (Eigen::Index i = 0; i < bonds; ++i) {
    const Eigen::Index j = (i + 1) % n;
    f -= (potential_diag[j] - potential_diag[i]) / dx * (std::conj(phi[i]) * phi[j]).real();
  }
  return f;
}

double commutator_force(const StateVector& phi, const Eigen::VectorXd& potential_diag,
                        const Operator& p_op, double hbar) {
  if (phi.size() != potential_diag.size() || phi.size() != p_op.rows())
    throw ShapeError("commutator_force: size mismatch");
  // (i/hbar) <[V, p]> = -(2/hbar) Im <phi| V p |phi> for diagonal real V
  const StateVector p_phi = p_op * phi;
  Complex acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < phi.size(); ++i)
    acc += std::conj(phi[i]) * potential_diag[i] * p_phi[i];
  return -(2.0 / hbar) * acc.imag();
}

double momentum_dispersion(const StateVector& phi, const Grid1D& grid, double hbar) {
  const double p = momentum_expectation(phi, grid, hbar);
  const Operator t = grid_kinetic(grid, hbar);
  const double p2 = 2.0 * grid.mass * (phi.adjoint() * t * phi).value().real();
  return p2 - p * p;
}

double newton_residual(const TrajectoryRecord& traj) {
  traj.check_consistent();
  if (traj.momentum.size() < 3 || traj.force.empty())
    throw IncompleteTrajectory("newton_residual: needs momentum and force series");
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < traj.size(); ++j) {
    const double dt = traj.times[j + 1] - traj.times[j - 1];
    const double dpdt = (traj.momentum[j + 1] - traj.momentum[j - 1]) / dt;
    worst = std::max(worst, std::abs(dpdt - traj.force[j]));
  }
  return worst;
}

EnergyLedger energy_ledger(const TrajectoryRecord& traj) {
  traj.check_consistent();
  if (traj.lambda.empty() || traj.energy.empty())
    throw IncompleteTrajectory("energy_ledger: needs lambda and energy series");
  EnergyLedger out;
  const std::size_t n = traj.size();
  out.heat_out = traj.lambda[n - 1] - traj.lambda[0];
  double drive_integral = 0.0;
  if (!traj.drive_power.empty()) {
    for (std::size_t j = 1; j < n; ++j)
      drive_integral +=
          0.5 * (traj.times[j] - traj.times[j - 1]) * (traj.drive_power[j - 1] + traj.drive_power[j]);
  }
  const double d_energy = traj.energy[n - 1] - traj.energy[0];
  out.residual = std::abs(d_energy + out.heat_out - drive_integral);
  return out;
}

namespace {

// Per-sample action integrand on the gauged trajectory, centered differences;
// zero at the two endpoints (they are excluded from the quadrature span).
std::vector<double> action_integrand(const TrajectoryRecord& traj, double hbar) {
  const std::size_t n = traj.size();
  if (n < 3 || traj.step_overlap.size() + 1 != n || traj.energy.empty() || traj.lambda.empty() ||
      traj.Lambda.empty())
    throw IncompleteTrajectory("action_value: needs energy, lambda, Lambda and step overlaps");
  std::vector<double> a(n, 0.0);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double dt = 0.5 * (traj.times[j + 1] - traj.times[j - 1]);
    const double dplus = (traj.Lambda[j + 1] - traj.Lambda[j]) / hbar;
    const double dminus = (traj.Lambda[j] - traj.Lambda[j - 1]) / hbar;
    const Complex fwd = traj.step_overlap[j] * Complex(std::cos(dplus), std::sin(dplus));
    const Complex bwd =
        std::conj(traj.step_overlap[j - 1]) * Complex(std::cos(dminus), -std::sin(dminus));
    const Complex ddt = (fwd - bwd) / (2.0 * dt);
    const double kinetic_like = (Complex(0.0, -hbar) * ddt).real();
    const double h_expect = traj.energy[j] + traj.lambda[j];  // <h> = script-E + lambda
    a[j] = kinetic_like + h_expect;
  }
  return a;
}

}  // namespace

double action_value(const TrajectoryRecord& traj, double hbar) {
  const std::vector<double> a = action_integrand(traj, hbar);
  const std::size_t n = traj.size();
  double s = 0.0;
  for (std::size_t j = 2; j + 1 < n; ++j)
    s += 0.5 * (traj.times[j] - traj.times[j - 1]) * (a[j - 1] + a[j]);
  return s;
}

double action_dissipation_residual(const TrajectoryRecord& traj, double hbar) {
  const double s = action_value(traj, hbar);
  const std::size_t n = traj.size();
  const double d_lambda = traj.Lambda[n - 2] - traj.Lambda[1];
  return std::abs(s - d_lambda);
}

double stationarity_check(const TrajectoryRecord& traj, const HamiltonianSpec& spec,
                          double epsilon, const StateVector& direction,
                          const std::vector<double>& envelope) {
  const std::size_t n = traj.size();
  if (n < 3 || traj.phi_snapshots.size() != n || !traj.effective_h.has_value())
    throw IncompleteTrajectory(
        "stationarity_check: needs phi snapshots and the recorded effective Hamiltonian");
  if (direction.size() != traj.phi_snapshots.front().size())
    throw ShapeError("stationarity_check: direction dimension mismatch");
  const Operator& h = *traj.effective_h;
  const double hbar = spec.hbar;
  const double t0 = traj.times.front(), t1 = traj.times.back();

  std::vector<double> env(n);
  if (!envelope.empty()) {
    if (envelope.size() != n) throw ShapeError("stationarity_check: envelope length mismatch");
    if (std::abs(envelope.front()) > 1e-12 || std::abs(envelope.back()) > 1e-12)
      throw BoundaryError("stationarity_check: perturbation must vanish at both endpoints");
    env = envelope;
  } else {
    // sin^2 vanishes to second order at the ends, which keeps the discrete
    // summation-by-parts boundary leftovers below the quadratic signal
    for (std::size_t j = 0; j < n; ++j) {
      const double s = (traj.times[j] - t0) / (t1 - t0);
      const double sp = std::sin(M_PI * s);
      env[j] = sp * sp;
    }
    env.front() = 0.0;
    env.back() = 0.0;
  }

  // gauged solution u_j = phi_j * exp(i Lambda_j / hbar)
  std::vector<StateVector> u(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double th = traj.Lambda[j] / hbar;
    u[j] = Complex(std::cos(th), std::sin(th)) * traj.phi_snapshots[j];
  }

  auto constrained_action = [&](const std::vector<StateVector>& w) {
    std::vector<double> integrand(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double two_dt = traj.times[j + 1] - traj.times[j - 1];
      const StateVector ddt = (w[j + 1] - w[j - 1]) / two_dt;
      const Complex kin = w[j].dot(Complex(0.0, -hbar) * ddt);
      const Complex pot = (w[j].adjoint() * h * w[j]).value();
      const double norm_term = traj.lambda[j] * (w[j].squaredNorm() - 1.0);
      integrand[j] = (kin + pot).real() - norm_term;
    }
    double s = 0.0;
    for (std::size_t j = 2; j + 1 < n; ++j)
      s += 0.5 * (traj.times[j] - traj.times[j - 1]) * (integrand[j - 1] + integrand[j]);
    return s;
  };

  const double s_base = constrained_action(u);
  std::vector<StateVector> pert(n);
  for (std::size_t j = 0; j < n; ++j) pert[j] = u[j] + (epsilon * env[j]) * direction;
  const double s_pert = constrained_action(pert);
  return std::abs(s_pert - s_base) / epsilon;
}

std::vector<ClassicalState> ehrenfest_trajectory(const TrajectoryRecord& traj, double mass) {
  traj.check_consistent();
  if (traj.momentum.empty() || traj.center_of_mass.empty())
    throw IncompleteTrajectory("ehrenfest_trajectory: needs momentum and center-of-mass series");
  std::vector<ClassicalState> out;
  out.reserve(traj.size());
  for (std::size_t j = 0; j < traj.size(); ++j)
    out.push_back({traj.center_of_mass[j], traj.momentum[j], mass});
  return out;
}

std::vector<ClassicalState> classical_oracle(const ClassicalState& initial,
                                             const Potential1D& potential, double total_time,
                                             double dt, const Potential1D& force) {
  auto f = force ? force : Potential1D([&potential](double q) {
    const double h = 6e-6 * std::max(1.0, std::abs(q));
    return -(potential(q + h) - potential(q - h)) / (2.0 * h);
  });
  std::vector<ClassicalState> out;
  const long steps = std::lround(total_time / dt);
  out.reserve(steps + 1);
  ClassicalState s = initial;
  out.push_back(s);
  for (long k = 0; k < steps; ++k) {
    s.p += 0.5 * dt * f(s.q);
    s.q += dt * s.p / s.mass;
    s.p += 0.5 * dt * f(s.q);
    out.push_back(s);
  }
  return out;
}

TranslationBalance translation_decomposition(const TrajectoryRecord& traj, const Grid1D& grid,
                                             double delta_x) {
  if (grid.boundary != Boundary::Periodic)
    throw TopologyError("translation_decomposition: defined on periodic grids only");
  if (std::abs(std::abs(delta_x) - grid.spacing) > 1e-12 * grid.spacing)
    throw ConfigError("translation_decomposition: delta_x must be one lattice step");
  traj.check_consistent();
  if (traj.momentum.size() < 2 || traj.force.empty())
    throw IncompleteTrajectory("translation_decomposition: needs momentum and force series");
  TranslationBalance out;
  const std::size_t n = traj.size();
  out.boundary_term = traj.momentum[n - 1] - traj.momentum[0];
  // bulk = int <dV/dx> dt = -int F dt with the same lattice pairing as the force
  double f_int = 0.0;
  for (std::size_t j = 1; j < n; ++j)
    f_int += 0.5 * (traj.times[j] - traj.times[j - 1]) * (traj.force[j - 1] + traj.force[j]);
  out.bulk_term = -f_int;
  return out;
}

}  // namespace branchsim
