#include "branchsim/meanfield.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <sstream>

#include "branchsim/observables.hpp"

namespace branchsim {

StateVector MeanFieldState::gauged_phi(double hbar) const {
  const double th = Lambda / hbar;
  return Complex(std::cos(th), std::sin(th)) * phi;
}

void MeanFieldState::require_normalized(double tol) const {
  require_unit_norm(phi, "MeanFieldState: phi", tol);
  require_unit_norm(psi, "MeanFieldState: psi", tol);
}

namespace {

// Both lambda routes keep the full complex value so the imaginary residue can
// be checked independently.
struct LambdaPair {
  Complex via_bath_functional;   // <psi| V_B |psi> with V_B built from phi
  Complex via_joint_expectation; // sum_k g_k <A_k><B_k>
};

LambdaPair lambda_two_ways(const MeanFieldState& state, const HamiltonianSpec& spec,
                           double drive_scale) {
  LambdaPair out{Complex(0, 0), Complex(0, 0)};
  bool all_diag = spec.compiled;
  for (const auto& term : spec.interaction) all_diag = all_diag && term.b_diagonal;
  if (all_diag) {
    Eigen::VectorXcd vb_diag = Eigen::VectorXcd::Zero(spec.dim_b());
    for (const auto& term : spec.interaction) {
      const Complex ea = term_expect_a(term, state.phi);
      const Complex eb = term_expect_b(term, state.psi);
      out.via_joint_expectation += drive_scale * term.coupling * ea * eb;
      vb_diag += (drive_scale * term.coupling * ea.real()) * term.b_diag;
    }
    for (Eigen::Index i = 0; i < state.psi.size(); ++i)
      out.via_bath_functional += vb_diag[i] * std::norm(state.psi[i]);
  } else {
    Operator v_b = Operator::Zero(spec.dim_b(), spec.dim_b());
    for (const auto& term : spec.interaction) {
      const Complex ea = term_expect_a(term, state.phi);
      const Complex eb = term_expect_b(term, state.psi);
      out.via_joint_expectation += drive_scale * term.coupling * ea * eb;
      v_b += (drive_scale * term.coupling * ea.real()) * term.op_b;
    }
    out.via_bath_functional = (state.psi.adjoint() * v_b * state.psi).value();
  }
  return out;
}

}  // namespace

double dissipation_rate(const MeanFieldState& state, const HamiltonianSpec& spec,
                        double drive_scale, double consistency_tol) {
  state.require_normalized();
  const LambdaPair pair = lambda_two_ways(state, spec, drive_scale);
  const double disagreement =
      std::abs(pair.via_bath_functional - pair.via_joint_expectation);
  if (disagreement > consistency_tol) {
    std::ostringstream msg;
    msg << "dissipation_rate: the two lambda formulas disagree by " << disagreement;
    throw GaugeInconsistency(msg.str());
  }
  return pair.via_joint_expectation.real();
}

double lambda_gauge_residual(const MeanFieldState& state, const HamiltonianSpec& spec,
                             double drive_scale) {
  const LambdaPair pair = lambda_two_ways(state, spec, drive_scale);
  return std::abs(pair.via_bath_functional - pair.via_joint_expectation);
}

double lambda_imag_residual(const MeanFieldState& state, const HamiltonianSpec& spec,
                            double drive_scale) {
  const LambdaPair pair = lambda_two_ways(state, spec, drive_scale);
  return std::max(std::abs(pair.via_bath_functional.imag()),
                  std::abs(pair.via_joint_expectation.imag()));
}

double dissipation_rate_b(const MeanFieldState& state, const HamiltonianSpec& spec,
                          double drive_scale) {
  state.require_normalized();
  Operator v_a = Operator::Zero(spec.dim_a(), spec.dim_a());
  for (const auto& term : spec.interaction) {
    const Complex eb = term_expect_b(term, state.psi);
    v_a += (drive_scale * term.coupling * eb.real()) * term.op_a;
  }
  return (state.phi.adjoint() * v_a * state.phi).value().real();
}

MeanFieldState make_meanfield_state(const StateVector& phi, const StateVector& psi,
                                    const HamiltonianSpec& spec, double t0,
                                    double drive_scale) {
  MeanFieldState s;
  s.phi = phi;
  s.psi = psi;
  s.t = t0;
  s.Lambda = 0.0;
  s.require_normalized();
  s.lambda = dissipation_rate(s, spec, drive_scale);
  return s;
}

MeanFieldState tdh_step(const MeanFieldState& state, const HamiltonianSpec& spec, double dt,
                        const PropagatorConfig& cfg, const DriveScale& drive) {
  state.require_normalized();
  const double tau_half = 0.5 * dt / spec.hbar;
  const double tau = dt / spec.hbar;
  auto scale_at = [&](double t) { return drive ? drive(t) : 1.0; };

  const double s0 = scale_at(state.t);
  const Operator v_a0 = mean_field_potential(spec, state.psi, state.t, s0).v;
  const Operator v_b0 = mean_field_potential_b(spec, state.phi, state.t, s0).v;

  // predictor half-step to the midpoint
  const StateVector phi_half =
      expm_apply(spec.h_a + v_a0, state.phi, tau_half, cfg.krylov_dim, cfg.krylov_tolerance);
  const StateVector psi_half =
      expm_apply(spec.h_b + v_b0, state.psi, tau_half, cfg.krylov_dim, cfg.krylov_tolerance);

  const double sm = scale_at(state.t + 0.5 * dt);
  const Operator v_am = mean_field_potential(spec, psi_half, state.t + 0.5 * dt, sm).v;
  const Operator v_bm = mean_field_potential_b(spec, phi_half, state.t + 0.5 * dt, sm).v;

  MeanFieldState next;
  next.phi = expm_apply(spec.h_a + v_am, state.phi, tau, cfg.krylov_dim, cfg.krylov_tolerance);
  next.psi = expm_apply(spec.h_b + v_bm, state.psi, tau, cfg.krylov_dim, cfg.krylov_tolerance);
  next.t = state.t + dt;

  const double phi_drift = std::abs(next.phi.norm() - 1.0);
  const double psi_drift = std::abs(next.psi.norm() - 1.0);
  if (std::max(phi_drift, psi_drift) > cfg.norm_tolerance_per_step) {
    std::ostringstream msg;
    msg << "tdh_step: factor norm drift " << std::max(phi_drift, psi_drift);
    throw IntegratorDiverged(msg.str());
  }

  next.lambda = dissipation_rate(next, spec, scale_at(next.t));
  next.Lambda = state.Lambda + 0.5 * dt * (state.lambda + next.lambda);
  return next;
}

std::vector<std::pair<double, double>> accumulate_phase(
    const std::vector<std::pair<double, double>>& lambda_series) {
  std::vector<std::pair<double, double>> out;
  out.reserve(lambda_series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < lambda_series.size(); ++i) {
    if (i > 0) {
      const double dt = lambda_series[i].first - lambda_series[i - 1].first;
      if (dt <= 0.0) throw TimeOrderError("accumulate_phase: times must increase strictly");
      acc += 0.5 * dt * (lambda_series[i - 1].second + lambda_series[i].second);
    }
    out.emplace_back(lambda_series[i].first, acc);
  }
  return out;
}

double meanfield_fidelity(const StateVector& exact, const MeanFieldState& state) {
  if (exact.size() != state.phi.size() * state.psi.size())
    throw ShapeError("meanfield_fidelity: dimension mismatch");
  // <exact | phi (x) psi> = sum_ab conj(X[a,b]) phi[a] psi[b], X = exact as a matrix
  const BipartiteSpace sp{state.phi.size(), state.psi.size()};
  const Complex ov =
      (state.phi.transpose() * as_matrix(exact, sp).conjugate() * state.psi).value();
  return std::norm(ov);
}

namespace {

// Dense cached one-step unitary for a static effective Hamiltonian.
struct CachedUnitary {
  Operator u;
  explicit CachedUnitary(const Operator& h, double tau) {
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    Eigen::VectorXcd phases(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      const double th = -tau * es.eigenvalues()[i];
      phases[i] = Complex(std::cos(th), std::sin(th));
    }
    u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  StateVector apply(const StateVector& v) const { return u * v; }
};

}  // namespace

MeanFieldRun run_meanfield(const HamiltonianSpec& spec, const MeanFieldState& initial,
                           const MeanFieldRunOptions& opts) {
  PropagatorConfig cfg = opts.propagator;
  cfg.dt = opts.dt;
  cfg.hbar = spec.hbar;
  cfg.validate();
  initial.require_normalized();

  const long steps = std::lround(opts.total_time / opts.dt);
  MeanFieldRun run;
  run.final_state = initial;

  auto drive_scale_at = [&](double t) { return opts.drive ? opts.drive(t) : 1.0; };
  auto drive_rate_at = [&](double t) { return opts.drive_rate ? opts.drive_rate(t) : 0.0; };

  const bool has_grid = spec.grid_a.has_value();
  Operator p_op, t_op;
  if (has_grid) {
    p_op = grid_momentum(*spec.grid_a, spec.hbar);
    t_op = grid_kinetic(*spec.grid_a, spec.hbar);
  }

  // Static-pair fast path: a one-dimensional B factor cannot change, so the
  // effective phi Hamiltonian is constant and its step unitary can be cached.
  const bool static_pair = (spec.dim_b() == 1) && !opts.drive;
  std::unique_ptr<CachedUnitary> cached;
  Operator static_v;
  if (static_pair) {
    static_v = mean_field_potential(spec, initial.psi, initial.t, 1.0).v;
    cached = std::make_unique<CachedUnitary>(Operator(spec.h_a + static_v), opts.dt / spec.hbar);
  }
  if (opts.record_snapshots)
    run.traj.effective_h =
        spec.h_a +
        mean_field_potential(spec, initial.psi, initial.t, drive_scale_at(initial.t)).v;

  auto effective_potential_diag = [&](const MeanFieldState& s, double t) -> Eigen::VectorXd {
    // total diagonal potential seen by phi: mean-field V plus whatever diagonal
    // sits in hA (trap terms); constant kinetic diagonals cancel in differences
    const Operator v = static_pair ? static_v
                                   : mean_field_potential(spec, s.psi, t, drive_scale_at(t)).v;
    Eigen::VectorXd diag(v.rows());
    for (Eigen::Index i = 0; i < v.rows(); ++i) diag[i] = v(i, i).real() + spec.h_a(i, i).real();
    return diag;
  };

  auto sample = [&](const MeanFieldState& s) {
    auto& traj = run.traj;
    const double t = s.t;
    const double scale = drive_scale_at(t);
    traj.times.push_back(t);
    traj.norms.push_back(s.phi.norm());
    traj.lambda.push_back(s.lambda);
    traj.Lambda.push_back(s.Lambda);
    // script-E = <h_A + V> - lambda, from the equation of motion
    const Operator v = static_pair ? static_v : mean_field_potential(spec, s.psi, t, scale).v;
    const double h_expect = (s.phi.adjoint() * (spec.h_a * s.phi + v * s.phi)).value().real();
    traj.energy.push_back(h_expect - s.lambda);
    // <dV/dt>: drive-ramp part plus the bath-motion part s * g <A> d<B>/dt,
    // with d<B>/dt = (i/hbar) <[h_B + V_B, B]> from the equation of motion
    {
      const double rate = drive_rate_at(t);
      double dv = 0.0;
      if (spec.dim_b() > 1 || rate != 0.0) {
        const Operator h_psi =
            spec.h_b + mean_field_potential_b(spec, s.phi, t, scale).v;
        const StateVector h_psi_psi = h_psi * s.psi;
        for (const auto& term : spec.interaction) {
          const double ea = term_expect_a(term, s.phi).real();
          const double eb = term_expect_b(term, s.psi).real();
          const StateVector b_psi = term.op_b * s.psi;
          const double db_dt = -(2.0 / spec.hbar) * h_psi_psi.dot(b_psi).imag();
          dv += term.coupling * ea * (rate * eb + scale * db_dt);
        }
      }
      traj.drive_power.push_back(dv);
    }
    if (has_grid) {
      traj.momentum.push_back(momentum_with_operator(s.phi, p_op));
      traj.center_of_mass.push_back(center_of_mass(s.phi, *spec.grid_a));
      const Eigen::VectorXd vd = effective_potential_diag(s, t);
      traj.force.push_back(spec.grid_a->kinetic == KineticKind::Spectral
                               ? commutator_force(s.phi, vd, p_op, spec.hbar)
                               : lattice_force(s.phi, vd, *spec.grid_a));
      const double p = traj.momentum.back();
      const double p2 = 2.0 * spec.grid_a->mass * (s.phi.adjoint() * t_op * s.phi).value().real();
      traj.dispersion.push_back(p2 - p * p);
    }
    if (opts.record_snapshots) traj.phi_snapshots.push_back(s.phi);
  };

  sample(run.final_state);
  for (long step = 1; step <= steps; ++step) {
    MeanFieldState next;
    if (static_pair) {
      const MeanFieldState& cur = run.final_state;
      next.phi = cached->apply(cur.phi);
      next.psi = cur.psi;  // 1-dim bath phase is a global factor; keep it pinned
      next.t = cur.t + opts.dt;
      next.lambda = dissipation_rate(next, spec, 1.0);
      next.Lambda = cur.Lambda + 0.5 * opts.dt * (cur.lambda + next.lambda);
      const double drift = std::abs(next.phi.norm() - 1.0);
      if (drift > cfg.norm_tolerance_per_step)
        throw IntegratorDiverged("run_meanfield: cached-unitary norm drift");
    } else {
      next = tdh_step(run.final_state, spec, opts.dt, cfg, opts.drive);
    }
    run.traj.step_overlap.push_back(overlap(run.final_state.phi, next.phi));
    run.final_state = next;
    sample(run.final_state);
  }
  run.traj.check_consistent();
  return run;
}

}  // namespace branchsim
