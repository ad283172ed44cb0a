#include "branchsim/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "branchsim/branches.hpp"
#include "branchsim/meanfield.hpp"
#include "branchsim/observables.hpp"
#include "branchsim/propagate.hpp"

namespace branchsim {
namespace oracles {

StateVector dense_propagate(const StateVector& phi0, const Operator& h, double t, double hbar,
                            Eigen::Index max_dim) {
  if (h.rows() > max_dim) throw CapacityExceeded("dense_propagate: dimension exceeds capacity");
  if (h.rows() != phi0.size()) throw ShapeError("dense_propagate: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  const Eigen::VectorXcd coeffs = es.eigenvectors().adjoint() * phi0;
  StateVector out = StateVector::Zero(phi0.size());
  for (Eigen::Index i = 0; i < phi0.size(); ++i) {
    const double th = -es.eigenvalues()[i] * t / hbar;
    out += coeffs[i] * Complex(std::cos(th), std::sin(th)) * es.eigenvectors().col(i);
  }
  return out;
}

Complex dephasing_closed_form(const std::vector<double>& couplings,
                              const std::vector<StateVector>& bath_qubit_states, double t,
                              double hbar) {
  if (couplings.size() != bath_qubit_states.size())
    throw ShapeError("dephasing_closed_form: couplings/states length mismatch");
  Complex omega(1.0, 0.0);
  for (std::size_t k = 0; k < couplings.size(); ++k) {
    const StateVector& b = bath_qubit_states[k];
    if (b.size() != 2) throw ShapeError("dephasing_closed_form: bath states must be qubits");
    const double th = 2.0 * couplings[k] * t / hbar;
    // <b| exp(-2 i g sigma_z t / hbar) |b>
    omega *= std::norm(b[0]) * Complex(std::cos(th), -std::sin(th)) +
             std::norm(b[1]) * Complex(std::cos(th), std::sin(th));
  }
  return omega;
}

int windowed_kernel_argmax(const std::vector<double>& weights,
                           const std::vector<double>& Lambdas, double hbar, int window) {
  if (window < 3 || window % 2 == 0)
    throw ConfigError("windowed_kernel_argmax: window must be odd and >= 3");
  if (weights.size() != Lambdas.size())
    throw ShapeError("windowed_kernel_argmax: length mismatch");
  const int n = static_cast<int>(weights.size());
  const int half = window / 2;
  int best = half;
  double best_val = -1.0;
  for (int c = half; c + half < n; ++c) {
    Complex k(0.0, 0.0);
    for (int j = c - half; j <= c + half; ++j) {
      const double th = Lambdas[j] / hbar;
      k += weights[j] * Complex(std::cos(th), std::sin(th));
    }
    const double v = std::abs(k);
    if (v > best_val + 1e-15) {
      best_val = v;
      best = c;
    }
  }
  return best;
}

std::vector<double> random_smooth_profile(int n_branches, std::mt19937_64& rng, double hbar) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x0 = 0.15 + 0.7 * u(rng);
  const double quad = 60.0 + 100.0 * u(rng);
  const double cubic = -8.0 + 16.0 * u(rng);
  const double ripple = 0.3 * u(rng);
  const double freq = 1.0 + 0.5 * u(rng);
  const double phase = 2.0 * M_PI * u(rng);
  std::vector<double> out(n_branches);
  for (int nu = 0; nu < n_branches; ++nu) {
    const double x = double(nu) / double(n_branches - 1) - x0;
    out[nu] = hbar * (quad * x * x + cubic * x * x * x +
                      ripple * std::sin(2.0 * M_PI * freq * x + phase));
  }
  return out;
}

Complex kahan_overlap(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw ShapeError("kahan_overlap: dimension mismatch");
  double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Complex term = std::conj(a[i]) * b[i];
    double y = term.real() - cr;
    double t = sr + y;
    cr = (t - sr) - y;
    sr = t;
    y = term.imag() - ci;
    t = si + y;
    ci = (t - si) - y;
    si = t;
  }
  return {sr, si};
}

Operator brute_force_partial_trace_a(const StateVector& joint, const BipartiteSpace& space) {
  if (joint.size() != space.joint_dim())
    throw ShapeError("brute_force_partial_trace_a: dimension mismatch");
  Operator rho = Operator::Zero(space.dim_a, space.dim_a);
  for (Eigen::Index a1 = 0; a1 < space.dim_a; ++a1)
    for (Eigen::Index a2 = 0; a2 < space.dim_a; ++a2)
      for (Eigen::Index b = 0; b < space.dim_b; ++b)
        rho(a1, a2) += joint[a1 * space.dim_b + b] * std::conj(joint[a2 * space.dim_b + b]);
  return rho;
}

Operator brute_force_joint(const HamiltonianSpec& spec) {
  const Eigen::Index da = spec.dim_a(), db = spec.dim_b();
  const Eigen::Index n = da * db;
  Operator h = Operator::Zero(n, n);
  for (Eigen::Index a1 = 0; a1 < da; ++a1)
    for (Eigen::Index b1 = 0; b1 < db; ++b1)
      for (Eigen::Index a2 = 0; a2 < da; ++a2)
        for (Eigen::Index b2 = 0; b2 < db; ++b2) {
          Complex val(0.0, 0.0);
          if (b1 == b2) val += spec.h_a(a1, a2);
          if (a1 == a2) val += spec.h_b(b1, b2);
          for (const auto& term : spec.interaction)
            val += term.coupling * term.op_a(a1, a2) * term.op_b(b1, b2);
          h(a1 * db + b1, a2 * db + b2) = val;
        }
  return h;
}

namespace {

StateVector random_state(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  StateVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = Complex(g(rng), g(rng));
  v.normalize();
  return v;
}

Operator random_hermitian(Eigen::Index dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Operator m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
  Operator h = 0.5 * (m + m.adjoint()) * (scale / std::sqrt(double(dim)));
  return h;
}

HamiltonianSpec random_spec(Eigen::Index da, Eigen::Index db, int terms, std::mt19937_64& rng,
                            double g_scale = 0.2) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  HamiltonianSpec spec;
  spec.h_a = random_hermitian(da, rng);
  spec.h_b = random_hermitian(db, rng);
  for (int k = 0; k < terms; ++k) {
    ProductTerm term;
    term.op_a = random_hermitian(da, rng);
    term.op_b = random_hermitian(db, rng);
    term.coupling = g_scale * u(rng);
    spec.interaction.push_back(std::move(term));
  }
  spec.validate();
  spec.compile();
  return spec;
}

using CheckFn = std::function<OracleReport()>;

OracleReport report(const char* name, double err, double threshold, long samples,
                    unsigned long seed) {
  return {name, err, threshold, samples, seed, err <= threshold};
}

OracleReport check_tensor_contract() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  const int samples = 20;
  for (int s = 0; s < samples; ++s) {
    const StateVector a = random_state(5, rng), b = random_state(7, rng);
    const StateVector joint = tensor_product(a, b);
    const StateVector back = contract_b(joint, {5, 7}, b);
    worst = std::max(worst, (back - a).cwiseAbs().maxCoeff());
    // direct-summation norm oracle
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < joint.size(); ++i) norm2 += std::norm(joint[i]);
    worst = std::max(worst, std::abs(std::sqrt(norm2) - 1.0));
  }
  return report("tensor-contract-roundtrip", worst, 1e-12, samples, 101);
}

OracleReport check_overlap_kahan() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  const int samples = 50;
  for (int s = 0; s < samples; ++s) {
    const StateVector a = random_state(8, rng), b = random_state(8, rng);
    worst = std::max(worst, std::abs(overlap(a, b) - kahan_overlap(a, b)));
  }
  return report("overlap-kahan-sum", worst, 1e-12, samples, 102);
}

OracleReport check_partial_trace() {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  const int samples = 10;
  const BipartiteSpace sp{4, 4};
  std::vector<StateVector> basis;
  for (Eigen::Index i = 0; i < 4; ++i) {
    StateVector e = StateVector::Zero(4);
    e[i] = 1.0;
    basis.push_back(e);
  }
  for (int s = 0; s < samples; ++s) {
    const StateVector joint = random_state(16, rng);
    const Operator got = reduced_coherence(joint, sp, basis);
    const Operator want = brute_force_partial_trace_a(joint, sp);
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  return report("reduced-density-partial-trace", worst, 1e-10, samples, 103);
}

OracleReport check_joint_assembly() {
  std::mt19937_64 rng(104);
  double worst = 0.0;
  const HamiltonianSpec spec = random_spec(4, 5, 3, rng);
  worst = (spec.assemble_joint() - brute_force_joint(spec)).cwiseAbs().maxCoeff();
  GridPairParams p;
  p.n_a = 16;
  p.n_b = 16;
  p.q_product = 0.5;
  p.softening = 1.0;
  const HamiltonianSpec grid = build_grid_pair(p);
  worst = std::max(worst, (grid.assemble_joint() - brute_force_joint(grid)).cwiseAbs().maxCoeff());
  return report("joint-assembly-elementwise", worst, 1e-12, 2, 104);
}

OracleReport check_propagator_vs_dense() {
  std::mt19937_64 rng(105);
  double worst = 0.0;
  const int samples = 5;
  for (int s = 0; s < samples; ++s) {
    const Operator h = random_hermitian(32, rng, 2.0);
    const StateVector v = random_state(32, rng);
    PropagatorConfig cfg;
    cfg.dt = 0.05;
    StateVector got = v;
    for (int k = 0; k < 20; ++k) got = step_exact(got, h, cfg);
    const StateVector want = dense_propagate(v, h, 1.0);
    worst = std::max(worst, 1.0 - std::norm(overlap(want, got)));
  }
  return report("krylov-vs-dense-infidelity", worst, 1e-9, samples, 105);
}

OracleReport check_lambda_joint() {
  std::mt19937_64 rng(106);
  double worst = 0.0;
  const int samples = 20;
  for (int s = 0; s < samples; ++s) {
    const HamiltonianSpec spec = random_spec(3, 5, 3, rng);
    MeanFieldState st;
    st.phi = random_state(3, rng);
    st.psi = random_state(5, rng);
    const double lam = dissipation_rate(st, spec);
    const StateVector joint = tensor_product(st.phi, st.psi);
    const Operator h_int = spec.interaction_joint();
    const double dense = (joint.adjoint() * h_int * joint).value().real();
    worst = std::max(worst, std::abs(lam - dense));
  }
  return report("lambda-vs-joint-expectation", worst, 1e-10, samples, 106);
}

OracleReport check_dephasing_closed_form() {
  // TDH branch overlap against the per-qubit product, K = 3
  const std::vector<double> gs{0.3, 0.45, 0.2};
  const HamiltonianSpec spec = build_dephasing_model(3, gs, 0.5 * pauli_z());
  std::vector<StateVector> bath;
  StateVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  for (int k = 0; k < 3; ++k) bath.push_back(plus);
  StateVector psi0 = bath[0];
  for (int k = 1; k < 3; ++k) psi0 = tensor_product(psi0, bath[k]);

  StateVector up = StateVector::Zero(2), down = StateVector::Zero(2);
  up[0] = 1.0;
  down[1] = 1.0;
  StateVector sup(2);
  sup << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  BranchEnsemble ens = init_branches(tensor_product(sup, psi0), spec.space(), {up, down}, psi0);

  double worst = 0.0;
  const double dt = 1e-3;
  const int chunks = 10, steps_per_chunk = 50;
  for (int c = 1; c <= chunks; ++c) {
    evolve_branches(ens, spec, dt, steps_per_chunk);
    const double t = ens.common_time();
    const Operator omega = offdiagonal_overlaps(ens);
    const Complex want = dephasing_closed_form(gs, bath, t);
    worst = std::max(worst, std::abs(omega(1, 0) - want));
  }
  return report("dephasing-overlap-closed-form", worst, 1e-8, chunks, 0);
}

OracleReport check_closed_form_vs_dense() {
  // closed form against dense joint propagation of each sigma_z branch, K = 4
  std::mt19937_64 rng(108);
  std::uniform_real_distribution<double> u(0.2, 0.6);
  std::vector<double> gs;
  std::vector<StateVector> bath;
  StateVector psi0;
  for (int k = 0; k < 4; ++k) {
    gs.push_back(u(rng));
    const double th = 0.2 + 0.5 * u(rng);
    StateVector b(2);
    b << std::cos(th), std::sin(th);
    bath.push_back(b);
    psi0 = (k == 0) ? b : StateVector(tensor_product(psi0, b));
  }
  const HamiltonianSpec spec = build_dephasing_model(4, gs, Operator::Zero(2, 2));
  const Operator joint_h = spec.assemble_joint();
  StateVector up = StateVector::Zero(2), down = StateVector::Zero(2);
  up[0] = 1.0;
  down[1] = 1.0;
  double worst = 0.0;
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    const StateVector plus_t = dense_propagate(tensor_product(up, psi0), joint_h, t);
    const StateVector minus_t = dense_propagate(tensor_product(down, psi0), joint_h, t);
    const BipartiteSpace sp = spec.space();
    const StateVector psi_plus = contract_a(plus_t, sp, up);
    const StateVector psi_minus = contract_a(minus_t, sp, down);
    const Complex got = overlap(psi_minus, psi_plus);
    const Complex want = dephasing_closed_form(gs, bath, t);
    worst = std::max(worst, std::abs(got - want));
  }
  return report("closed-form-vs-dense-joint", worst, 1e-9, 4, 108);
}

OracleReport check_kernel_dirichlet() {
  double worst = 0.0;
  for (int n : {8, 64})
    for (double theta : {0.1, 0.5, 1.0}) {
      std::vector<double> w(n, 1.0 / n), L(n);
      for (int nu = 0; nu < n; ++nu) L[nu] = nu * theta;
      const double got = std::abs(interference_kernel(w, L, 1.0));
      const double want = std::abs(std::sin(0.5 * n * theta) / (n * std::sin(0.5 * theta)));
      worst = std::max(worst, std::abs(got - want));
    }
  return report("kernel-dirichlet-identity", worst, 1e-12, 6, 0);
}

OracleReport check_windowed_selection() {
  std::mt19937_64 rng(110);
  const int profiles = 100, n = 64;
  int disagreements = 0;
  for (int s = 0; s < profiles; ++s) {
    const std::vector<double> L = random_smooth_profile(n, rng, 1.0);
    const std::vector<double> w(n, 1.0 / n);
    BranchEnsemble ens;
    ens.hbar = 1.0;
    for (int nu = 0; nu < n; ++nu) {
      Branch br;
      br.nu = nu;
      br.alpha = std::sqrt(w[nu]);
      br.state.phi = StateVector::Ones(1);
      br.state.psi = StateVector::Ones(1);
      br.state.Lambda = L[nu];
      br.state.t = 1.0;
      ens.branches.push_back(std::move(br));
    }
    ens.last_dt = 1.0;
    const int got = select_dominant(ens, 1.0).nu_c;
    const int want = windowed_kernel_argmax(w, L, 1.0, 5);
    if (got != want) ++disagreements;
  }
  return report("selection-vs-windowed-kernel", double(disagreements) / profiles, 0.05, profiles,
                110);
}

OracleReport check_classical_energy() {
  const double omega = 1.3, mass = 1.0;
  auto v = [=](double q) { return 0.5 * mass * omega * omega * q * q; };
  auto f = [=](double q) { return -mass * omega * omega * q; };
  const auto path = classical_oracle({1.0, 0.2, mass}, v, 2.0 * M_PI / omega, 1e-4, f);
  const double e0 = path.front().p * path.front().p / (2 * mass) + v(path.front().q);
  double worst = 0.0;
  for (const auto& s : path)
    worst = std::max(worst, std::abs(s.p * s.p / (2 * mass) + v(s.q) - e0) / std::abs(e0));
  return report("leapfrog-energy-drift", worst, 1e-6, long(path.size()), 0);
}

OracleReport check_meanfield_isolated() {
  std::mt19937_64 rng(112);
  HamiltonianSpec spec = random_spec(4, 6, 0, rng);  // no interaction terms
  MeanFieldState st;
  st.phi = random_state(4, rng);
  st.psi = random_state(6, rng);
  st = make_meanfield_state(st.phi, st.psi, spec);
  MeanFieldRunOptions opts;
  opts.dt = 1e-2;
  opts.total_time = 5.0;
  const MeanFieldRun run = run_meanfield(spec, st, opts);
  const StateVector exact =
      dense_propagate(tensor_product(st.phi, st.psi), spec.assemble_joint(), 5.0);
  const double infidelity = 1.0 - meanfield_fidelity(exact, run.final_state);
  return report("isolated-limit-reduction", std::abs(infidelity), 1e-9, 1, 112);
}

}  // namespace

std::vector<OracleReport> run_battery(const std::string& filter) {
  const std::vector<CheckFn> checks = {
      check_tensor_contract,    check_overlap_kahan,       check_partial_trace,
      check_joint_assembly,     check_propagator_vs_dense, check_lambda_joint,
      check_dephasing_closed_form, check_closed_form_vs_dense, check_kernel_dirichlet,
      check_windowed_selection, check_classical_energy,    check_meanfield_isolated,
  };
  std::vector<OracleReport> out;
  for (const auto& fn : checks) {
    OracleReport r = fn();
    if (!filter.empty() && r.name.find(filter) == std::string::npos) continue;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace oracles
}  // namespace branchsim
