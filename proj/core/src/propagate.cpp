#include "branchsim/propagate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace branchsim {

void PropagatorConfig::validate() const {
  if (dt <= 0.0) throw ConfigError("PropagatorConfig: dt must be positive");
  if (hbar <= 0.0) throw ConfigError("PropagatorConfig: hbar must be positive");
  if (krylov_dim < 2) throw ConfigError("PropagatorConfig: krylov_dim must be >= 2");
}

namespace {

// exp(-i tau T) (beta e1) for the real symmetric tridiagonal Lanczos matrix.
Eigen::VectorXcd tridiag_expm_e1(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                 double tau, double scale) {
  const Eigen::Index m = alpha.size();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < m) {
      t(i, i + 1) = beta[i];
      t(i + 1, i) = beta[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  Eigen::VectorXcd phases(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double th = -tau * es.eigenvalues()[i];
    phases[i] = Complex(std::cos(th), std::sin(th));
  }
  const Eigen::VectorXd first_row = es.eigenvectors().row(0).transpose();
  Eigen::VectorXcd w = Eigen::VectorXcd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) w += (scale * first_row[i] * phases[i]) * es.eigenvectors().col(i);
  return w;
}

}  // namespace

StateVector krylov_expm_apply(const std::function<StateVector(const StateVector&)>& apply_h,
                              const StateVector& v, double tau, int max_dim, double tol,
                              int depth) {
  const Eigen::Index n = v.size();
  const double beta0 = v.norm();
  if (beta0 == 0.0) return v;
  const Eigen::Index m_cap = std::min<Eigen::Index>(n, std::max(2, max_dim));

  std::vector<StateVector> basis;
  basis.reserve(m_cap);
  basis.push_back(v / beta0);
  Eigen::VectorXd alpha(m_cap), beta(m_cap);
  Eigen::Index m = 0;
  double h_next = 0.0;
  bool happy = false;
  Eigen::VectorXcd w_small;
  double err_est = 0.0;

  for (; m < m_cap; ++m) {
    StateVector w = apply_h(basis[m]);
    const double a = basis[m].dot(w).real();
    alpha[m] = a;
    w -= a * basis[m];
    if (m > 0) w -= beta[m - 1] * basis[m - 1];
    // full reorthogonalization keeps the subspace clean at desk scale
    for (const auto& q : basis) w -= q.dot(w) * q;
    h_next = w.norm();
    if (h_next < 1e-14) {  // happy breakdown: subspace is invariant
      ++m;
      happy = true;
      break;
    }
    // convergence probe on a sparse schedule; the small problem is cheap
    const Eigen::Index mm = m + 1;
    if (mm == m_cap || mm >= 4) {
      w_small = tridiag_expm_e1(alpha.head(mm), beta.head(mm - 1), tau, beta0);
      err_est = std::abs(h_next * std::abs(tau) * std::abs(w_small[mm - 1]));
      if (err_est <= tol * std::max(1.0, beta0)) {
        ++m;
        break;
      }
    }
    if (mm < m_cap) {
      beta[m] = h_next;
      basis.push_back(w / h_next);
    } else {
      ++m;
      break;
    }
  }

  if (w_small.size() != m)
    w_small = tridiag_expm_e1(alpha.head(m), beta.head(std::max<Eigen::Index>(m - 1, 0)), tau,
                              beta0);
  if (!happy && err_est > tol * std::max(1.0, beta0)) {
    if (depth > 40)
      throw IntegratorDiverged("krylov_expm_apply: step refinement did not converge");
    StateVector half = krylov_expm_apply(apply_h, v, tau / 2.0, max_dim, tol / 2.0, depth + 1);
    return krylov_expm_apply(apply_h, half, tau / 2.0, max_dim, tol / 2.0, depth + 1);
  }

  StateVector out = StateVector::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) out += w_small[i] * basis[i];
  return out;
}

StateVector expm_apply(const Operator& h, const StateVector& v, double tau, int krylov_dim,
                       double tol) {
  const Eigen::Index n = h.rows();
  if (v.size() != n) throw ShapeError("expm_apply: dimension mismatch");
  // Diagonal fast path (exact): common for dephasing baths and grid potentials.
  bool diagonal = true;
  for (Eigen::Index i = 0; i < n && diagonal; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && std::abs(h(i, j)) > 1e-15) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    StateVector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double th = -tau * h(i, i).real();
      out[i] = Complex(std::cos(th), std::sin(th)) * v[i];
    }
    return out;
  }
  if (n <= 24) {
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    Eigen::VectorXcd phases(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double th = -tau * es.eigenvalues()[i];
      phases[i] = Complex(std::cos(th), std::sin(th));
    }
    return es.eigenvectors() * (phases.array() * (es.eigenvectors().adjoint() * v).array()).matrix();
  }
  return krylov_expm_apply([&h](const StateVector& x) { return StateVector(h * x); }, v, tau,
                           krylov_dim, tol);
}

StateVector step_exact(const StateVector& phi, const Operator& h, const PropagatorConfig& cfg) {
  cfg.validate();
  require_hermitian(h, "step_exact: H");
  require_unit_norm(phi, "step_exact: phi");
  StateVector out = expm_apply(h, phi, cfg.dt / cfg.hbar, cfg.krylov_dim, cfg.krylov_tolerance);
  const double drift = std::abs(out.norm() - 1.0);
  if (drift > cfg.norm_tolerance_per_step) {
    std::ostringstream msg;
    msg << "step_exact: norm drift " << drift << " exceeds " << cfg.norm_tolerance_per_step;
    throw IntegratorDiverged(msg.str());
  }
  return out;
}

namespace {

TrajectoryRecord evolve_impl(const StateVector& phi0, double total_time,
                             const PropagatorConfig& cfg,
                             const std::function<StateVector(const StateVector&)>& stepper,
                             const std::vector<StepObserver>& observers) {
  if (total_time < 0.0) throw ConfigError("evolve: negative time span");
  TrajectoryRecord traj;
  const long steps = (total_time == 0.0) ? 0 : std::lround(total_time / cfg.dt);
  StateVector state = phi0;
  double t = 0.0;
  auto sample = [&](double time, const StateVector& s) {
    traj.times.push_back(time);
    traj.norms.push_back(s.norm());
    for (const auto& obs : observers) obs(time, s);
  };
  sample(0.0, state);
  for (long step = 1; step <= steps; ++step) {
    state = stepper(state);
    t = double(step) * cfg.dt;
    sample(t, state);
  }
  const double budget = std::max(1.0, double(steps)) * cfg.norm_tolerance_per_step;
  if (std::abs(state.norm() - 1.0) > budget)
    throw IntegratorDiverged("evolve: accumulated norm drift beyond tolerance");
  return traj;
}

}  // namespace

TrajectoryRecord evolve(const StateVector& phi0, const Operator& h, double total_time,
                        const PropagatorConfig& cfg, const std::vector<StepObserver>& observers) {
  cfg.validate();
  require_hermitian(h, "evolve: H");
  require_unit_norm(phi0, "evolve: phi0");
  return evolve_impl(
      phi0, total_time, cfg,
      [&](const StateVector& s) {
        return expm_apply(h, s, cfg.dt / cfg.hbar, cfg.krylov_dim, cfg.krylov_tolerance);
      },
      observers);
}

JointPropagator::JointPropagator(const HamiltonianSpec& spec, const PropagatorConfig& cfg)
    : spec_(spec), cfg_(cfg) {
  cfg_.validate();
  spec_.validate();
  if (spec_.space().joint_dim() > cfg_.max_joint_dim)
    throw CapacityExceeded("JointPropagator: joint dimension exceeds capacity");
  if (cfg_.method == Method::SplitSecondOrder) prepare_split();
}

void JointPropagator::prepare_split() {
  const double tau_half = 0.5 * cfg_.dt / cfg_.hbar;
  auto unitary_of = [&](const Operator& h, double tau) {
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    Eigen::VectorXcd phases(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      const double th = -tau * es.eigenvalues()[i];
      phases[i] = Complex(std::cos(th), std::sin(th));
    }
    return Operator(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
  };
  u_a_half_ = unitary_of(spec_.h_a, tau_half);
  u_b_half_ = unitary_of(spec_.h_b, tau_half);

  interaction_diagonal_ = true;
  for (const auto& term : spec_.interaction) {
    auto diag = [](const Operator& op) {
      for (Eigen::Index i = 0; i < op.rows(); ++i)
        for (Eigen::Index j = 0; j < op.cols(); ++j)
          if (i != j && std::abs(op(i, j)) > 1e-15) return false;
      return true;
    };
    if (!diag(term.op_a) || !diag(term.op_b)) {
      interaction_diagonal_ = false;
      break;
    }
  }
  const Eigen::Index da = spec_.dim_a(), db = spec_.dim_b();
  const double tau = cfg_.dt / cfg_.hbar;
  if (interaction_diagonal_) {
    Eigen::VectorXd joint_diag = Eigen::VectorXd::Zero(da * db);
    for (const auto& term : spec_.interaction)
      for (Eigen::Index a = 0; a < da; ++a)
        for (Eigen::Index b = 0; b < db; ++b)
          joint_diag[a * db + b] +=
              term.coupling * term.op_a(a, a).real() * term.op_b(b, b).real();
    diag_phase_.resize(da * db);
    for (Eigen::Index i = 0; i < da * db; ++i) {
      const double th = -tau * joint_diag[i];
      diag_phase_[i] = Complex(std::cos(th), std::sin(th));
    }
  } else {
    u_int_ = unitary_of(spec_.interaction_joint(cfg_.max_joint_dim), tau);
  }
  split_ready_ = true;
}

StateVector JointPropagator::step(const StateVector& joint) const {
  const BipartiteSpace sp = spec_.space();
  if (joint.size() != sp.joint_dim()) throw ShapeError("JointPropagator::step: dimension mismatch");
  if (cfg_.method == Method::Krylov) {
    return krylov_expm_apply(
        [this](const StateVector& x) { return spec_.apply_joint(x); }, joint,
        cfg_.dt / cfg_.hbar, cfg_.krylov_dim, cfg_.krylov_tolerance);
  }
  // Strang: U0(dt/2) U1(dt) U0(dt/2)
  auto free_half = [&](const StateVector& x) {
    const auto xm = as_matrix(x, sp);
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> y =
        u_a_half_ * xm * u_b_half_.transpose();
    return StateVector(Eigen::Map<const StateVector>(y.data(), x.size()));
  };
  StateVector y = free_half(joint);
  if (interaction_diagonal_) {
    y.array() *= diag_phase_.array();
  } else {
    y = u_int_ * y;
  }
  return free_half(y);
}

TrajectoryRecord evolve_joint(const StateVector& joint0, const HamiltonianSpec& spec,
                              double total_time, const PropagatorConfig& cfg,
                              const std::vector<StepObserver>& observers) {
  require_unit_norm(joint0, "evolve_joint: initial state");
  JointPropagator prop(spec, cfg);
  return evolve_impl(
      joint0, total_time, cfg, [&](const StateVector& s) { return prop.step(s); }, observers);
}

}  // namespace branchsim
