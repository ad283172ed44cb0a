#include "branchsim/branches.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "branchsim/parallel.hpp"

namespace branchsim {

double BranchEnsemble::weight(std::size_t i) const {
  const Complex a = branches.at(i).alpha;
  return weight_mode == WeightMode::ModSquared ? std::norm(a) : std::abs(a);
}

double BranchEnsemble::weight_sum() const {
  double s = 0.0;
  for (std::size_t i = 0; i < branches.size(); ++i) s += weight(i);
  return s;
}

double BranchEnsemble::common_time() const {
  if (branches.empty()) throw SyncError("ensemble has no branches");
  double lo = branches.front().state.t, hi = lo;
  for (const auto& br : branches) {
    lo = std::min(lo, br.state.t);
    hi = std::max(hi, br.state.t);
  }
  const double tol = last_dt > 0.0 ? 0.5 * last_dt : 1e-12 * std::max(1.0, std::abs(hi));
  if (hi - lo > tol) {
    std::ostringstream msg;
    msg << "branches desynchronized: time spread " << (hi - lo);
    throw SyncError(msg.str());
  }
  return hi;
}

BranchEnsemble init_branches(const StateVector& phi0_joint, const BipartiteSpace& space,
                             const std::vector<StateVector>& basis_a, const StateVector& psi0,
                             double hbar, WeightMode mode) {
  require_unit_norm(psi0, "init_branches: psi0");
  if (phi0_joint.size() != space.joint_dim())
    throw ShapeError("init_branches: joint state dimension mismatch");
  // orthonormality of the branch basis
  const auto n = static_cast<Eigen::Index>(basis_a.size());
  for (const auto& chi : basis_a)
    if (chi.size() != space.dim_a) throw ShapeError("init_branches: basis dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const Complex g = basis_a[i].dot(basis_a[j]);
      const double dev = std::abs(g - (i == j ? Complex(1.0) : Complex(0.0)));
      if (dev > kBasisGramTol) throw BasisError("init_branches: branch basis not orthonormal");
    }

  BranchEnsemble ens;
  ens.hbar = hbar;
  ens.weight_mode = mode;
  ens.branches.reserve(basis_a.size());
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    Branch br;
    br.nu = static_cast<int>(nu);
    // alpha_nu = <chi_nu (x) psi0, Phi0>
    const StateVector reduced = contract_a(phi0_joint, space, basis_a[nu]);
    br.alpha = psi0.dot(reduced);
    br.state.phi = basis_a[nu];
    br.state.psi = psi0;
    br.state.t = 0.0;
    br.state.lambda = 0.0;
    br.state.Lambda = 0.0;
    ens.branches.push_back(std::move(br));
  }
  return ens;
}

void evolve_branches(BranchEnsemble& ens, const HamiltonianSpec& spec, double dt, int steps,
                     const PropagatorConfig& cfg_in, bool record_history, int max_workers) {
  if (steps < 0) throw ConfigError("evolve_branches: negative step count");
  PropagatorConfig cfg = cfg_in;
  cfg.dt = dt;
  cfg.hbar = spec.hbar;
  cfg.validate();

  // initialize lambda lazily so hand-built ensembles work too
  for (auto& br : ens.branches)
    if (br.state.t == 0.0 && br.state.Lambda == 0.0)
      br.state.lambda = dissipation_rate(br.state, spec);

  if (record_history) {
    ens.history.lambda.assign(ens.size(), {});
    ens.history.Lambda.assign(ens.size(), {});
    ens.history.times.clear();
    const double t0 = ens.branches.empty() ? 0.0 : ens.branches.front().state.t;
    for (int s = 0; s <= steps; ++s) ens.history.times.push_back(t0 + s * dt);
  }

  parallel_for_indices(
      ens.size(),
      [&](std::size_t i) {
        auto& br = ens.branches[i];
        try {
          if (record_history) {
            ens.history.lambda[i].reserve(steps + 1);
            ens.history.Lambda[i].reserve(steps + 1);
            ens.history.lambda[i].push_back(br.state.lambda);
            ens.history.Lambda[i].push_back(br.state.Lambda);
          }
          for (int s = 0; s < steps; ++s) {
            br.state = tdh_step(br.state, spec, dt, cfg);
            if (record_history) {
              ens.history.lambda[i].push_back(br.state.lambda);
              ens.history.Lambda[i].push_back(br.state.Lambda);
            }
          }
        } catch (const IntegratorDiverged& e) {
          std::ostringstream msg;
          msg << "branch " << br.nu << ": " << e.what();
          throw IntegratorDiverged(msg.str());
        } catch (const GaugeInconsistency& e) {
          std::ostringstream msg;
          msg << "branch " << br.nu << ": " << e.what();
          throw GaugeInconsistency(msg.str());
        }
      },
      max_workers);
  ens.last_dt = dt;
}

Operator offdiagonal_overlaps(const BranchEnsemble& ens) {
  const auto n = static_cast<Eigen::Index>(ens.size());
  Operator omega(n, n);
  for (Eigen::Index nup = 0; nup < n; ++nup)
    for (Eigen::Index nu = 0; nu < n; ++nu)
      omega(nup, nu) = overlap(ens.branches[nup].state.psi, ens.branches[nu].state.psi);
  return omega;
}

double max_offdiagonal_overlap(const BranchEnsemble& ens) {
  return max_offdiagonal(offdiagonal_overlaps(ens));
}

Complex interference_kernel(const std::vector<double>& weights,
                            const std::vector<double>& Lambdas, double hbar) {
  if (weights.size() != Lambdas.size())
    throw ShapeError("interference_kernel: length mismatch");
  Complex k(0.0, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw WeightError("interference_kernel: negative weight");
    const double th = Lambdas[i] / hbar;
    k += weights[i] * Complex(std::cos(th), std::sin(th));
  }
  return k;
}

StateVector partial_wave(const BranchEnsemble& ens) {
  if (ens.branches.empty()) throw SyncError("partial_wave: empty ensemble");
  ens.common_time();
  StateVector out = StateVector::Zero(ens.branches.front().state.phi.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto& br = ens.branches[i];
    const double th = br.state.Lambda / ens.hbar;
    out += ens.weight(i) * Complex(std::cos(th), std::sin(th)) * br.state.phi;
  }
  return out;
}

PhaseSpread phase_spread(const BranchEnsemble& ens) {
  if (ens.size() < 2) throw ShapeError("phase_spread: need at least two branches");
  const double t = ens.common_time();
  PhaseSpread out;
  std::vector<double> gaps;
  gaps.reserve(ens.size() - 1);
  double lo = ens.branches.front().state.Lambda, hi = lo;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double L = ens.branches[i].state.Lambda;
    lo = std::min(lo, L);
    hi = std::max(hi, L);
    if (i > 0) gaps.push_back(std::abs(L - ens.branches[i - 1].state.Lambda) / ens.hbar);
  }
  std::sort(gaps.begin(), gaps.end());
  const std::size_t m = gaps.size();
  out.density = (m % 2 == 1) ? gaps[m / 2] : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
  out.spread_rate = (t > 0.0) ? (hi - lo) / (ens.hbar * t) : 0.0;
  return out;
}

SelectionDiagnostics select_dominant(const BranchEnsemble& ens, double t) {
  if (ens.branches.empty()) throw ShapeError("select_dominant: empty ensemble");
  const double t_now = ens.common_time();
  const double tol = ens.last_dt > 0.0 ? 0.5 * ens.last_dt : 1e-12 * std::max(1.0, std::abs(t_now));
  if (std::abs(t - t_now) > tol)
    throw SyncError("select_dominant: requested time differs from the ensemble time");

  SelectionDiagnostics diag;
  const std::size_t n = ens.size();
  diag.Lambdas.resize(n);
  diag.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag.Lambdas[i] = ens.branches[i].state.Lambda;
    diag.weights[i] = ens.weight(i);
  }
  diag.stationarity.resize(n);
  if (n == 1) {
    diag.stationarity[0] = 0.0;
    diag.nu_c = ens.branches[0].nu;
    return diag;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0)
      diag.stationarity[i] = 2.0 * std::abs(diag.Lambdas[1] - diag.Lambdas[0]);
    else if (i + 1 == n)
      diag.stationarity[i] = 2.0 * std::abs(diag.Lambdas[n - 1] - diag.Lambdas[n - 2]);
    else
      diag.stationarity[i] = std::abs(diag.Lambdas[i + 1] - diag.Lambdas[i - 1]);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = diag.stationarity[i] - diag.stationarity[best];
    if (d < -1e-15) {
      best = i;
    } else if (std::abs(d) <= 1e-15 && diag.weights[i] > diag.weights[best] + 1e-15) {
      best = i;  // tie: larger weight wins, lower index otherwise
    }
  }
  diag.nu_c = ens.branches[best].nu;
  return diag;
}

std::vector<StateVector> make_branch_basis(const HamiltonianSpec& spec, BasisKind kind) {
  const Eigen::Index n = spec.dim_a();
  std::vector<StateVector> basis;
  basis.reserve(n);
  if (kind == BasisKind::Pointer) {
    for (Eigen::Index i = 0; i < n; ++i) {
      StateVector e = StateVector::Zero(n);
      e[i] = 1.0;
      basis.push_back(std::move(e));
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Operator> es(spec.h_a);
    for (Eigen::Index i = 0; i < n; ++i) basis.push_back(es.eigenvectors().col(i));
  }
  return basis;
}

}  // namespace branchsim
