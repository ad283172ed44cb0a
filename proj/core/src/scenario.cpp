#include "branchsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "branchsim/branches.hpp"
#include "branchsim/meanfield.hpp"
#include "branchsim/observables.hpp"
#include "branchsim/oracles.hpp"
#include "branchsim/parallel.hpp"
#include "branchsim/propagate.hpp"

namespace branchsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// configuration parsing

namespace {

struct RawEntry {
  std::string value;
  int line = 0;
};

[[noreturn]] void config_fail(const std::string& origin, int line, const std::string& what) {
  std::ostringstream msg;
  msg << origin << ":" << line << ": " << what;
  throw ConfigError(msg.str());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& origin, int line, const std::string& key,
                    const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    if (!std::isfinite(x)) throw std::invalid_argument("nonfinite");
    return x;
  } catch (...) {
    config_fail(origin, line, "key '" + key + "' expects a finite number, got '" + v + "'");
  }
}

long parse_int(const std::string& origin, int line, const std::string& key,
               const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (...) {
    config_fail(origin, line, "key '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::vector<double> parse_double_list(const std::string& origin, int line, const std::string& key,
                                      const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(origin, line, key, item));
  }
  return out;
}

}  // namespace

void ScenarioConfig::validate() const {
  static const std::vector<std::string> scenarios = {"dephasing", "grid2body", "classical-limit",
                                                     "branch-study", "check"};
  if (std::find(scenarios.begin(), scenarios.end(), scenario) == scenarios.end())
    throw ConfigError("unknown scenario '" + scenario + "'");
  if (dt <= 0.0 || !(dt < total_time) || !std::isfinite(total_time))
    throw ConfigError("need 0 < dt < T");
  if (hbar <= 0.0) throw ConfigError("hbar must be positive");
  if (method != "krylov" && method != "split") throw ConfigError("method must be krylov|split");
  if (bath_qubits < 1) throw ConfigError("K must be >= 1");
  if (n_branches < 1) throw ConfigError("branches must be >= 1");
  if (selection_window < 3 || selection_window % 2 == 0)
    throw ConfigError("selectionWindow must be odd and >= 3");
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
  ScenarioConfig cfg;
  std::map<std::string, RawEntry> raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) config_fail(origin, lineno, "expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) config_fail(origin, lineno, "empty key");
    if (raw.count(key)) config_fail(origin, lineno, "duplicate key '" + key + "'");
    raw[key] = {value, lineno};
  }

  auto take = [&](const char* key) -> const RawEntry* {
    auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };
  auto d = [&](const char* key, double& field) {
    if (const RawEntry* e = take(key)) field = parse_double(origin, e->line, key, e->value);
  };
  auto i = [&](const char* key, auto& field) {
    if (const RawEntry* e = take(key))
      field = static_cast<std::remove_reference_t<decltype(field)>>(
          parse_int(origin, e->line, key, e->value));
  };
  auto s = [&](const char* key, std::string& field) {
    if (const RawEntry* e = take(key)) field = e->value;
  };

  s("scenario", cfg.scenario);
  i("seed", cfg.seed);
  d("hbar", cfg.hbar);
  d("dt", cfg.dt);
  d("T", cfg.total_time);
  s("method", cfg.method);
  s("outDir", cfg.out_dir);
  i("K", cfg.bath_qubits);
  if (const RawEntry* e = take("couplings"))
    cfg.couplings = parse_double_list(origin, e->line, "couplings", e->value);
  d("gScale", cfg.g_scale);
  d("gMin", cfg.g_min);
  d("gMax", cfg.g_max);
  d("systemSplitting", cfg.system_splitting);
  d("systemBias", cfg.system_bias);
  s("bathState", cfg.bath_state);
  d("bathAngle", cfg.bath_angle);
  s("initialPhi", cfg.initial_phi);
  s("drive", cfg.drive);
  d("driveRate", cfg.drive_rate);
  i("gridN", cfg.grid_n);
  i("gridNB", cfg.grid_n_b);
  d("gridLength", cfg.grid_length);
  d("mass", cfg.mass);
  d("massB", cfg.mass_b);
  d("qProduct", cfg.q_product);
  d("softening", cfg.softening);
  s("boundary", cfg.boundary);
  s("kinetic", cfg.kinetic);
  s("potential", cfg.potential);
  d("omega", cfg.omega);
  d("forceSlope", cfg.force_slope);
  d("packetCenter", cfg.packet_center);
  d("packetMomentum", cfg.packet_momentum);
  d("packetWidth", cfg.packet_width);
  d("packetCenterB", cfg.packet_center_b);
  d("packetMomentumB", cfg.packet_momentum_b);
  d("packetWidthB", cfg.packet_width_b);
  i("branches", cfg.n_branches);
  s("basis", cfg.basis);
  s("weightMode", cfg.weight_mode);
  i("selectionWindow", cfg.selection_window);
  d("profileCenter", cfg.profile_center);
  d("profileCurvature", cfg.profile_curvature);
  d("envelopeWidth", cfg.envelope_width);
  d("offdiagThreshold", cfg.offdiag_threshold);
  s("checkFilter", cfg.check_filter);
  i("maxJointDim", cfg.max_joint_dim);

  static const std::vector<std::string> known = {
      "scenario",      "seed",          "hbar",          "dt",
      "T",             "method",        "outDir",        "K",
      "couplings",     "gScale",        "gMin",          "gMax",
      "systemSplitting", "systemBias",  "bathState",     "bathAngle",
      "initialPhi",    "drive",         "driveRate",     "gridN",
      "gridNB",        "gridLength",    "mass",          "massB",
      "qProduct",      "softening",     "boundary",      "kinetic",
      "potential",     "omega",         "forceSlope",    "packetCenter",
      "packetMomentum", "packetWidth",  "packetCenterB", "packetMomentumB",
      "packetWidthB",  "branches",      "basis",         "weightMode",
      "selectionWindow", "profileCenter", "profileCurvature", "envelopeWidth",
      "offdiagThreshold", "checkFilter", "maxJointDim"};
  for (const auto& [key, entry] : raw)
    if (std::find(known.begin(), known.end(), key) == known.end())
      config_fail(origin, entry.line, "unknown key '" + key + "'");

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  // resolved echo: every key at its final value, not only those provided
  auto put = [&](const std::string& k, const std::string& v) { cfg.echo[k] = v; };
  put("scenario", cfg.scenario);
  put("seed", std::to_string(cfg.seed));
  put("hbar", format_number(cfg.hbar));
  put("dt", format_number(cfg.dt));
  put("T", format_number(cfg.total_time));
  put("method", cfg.method);
  put("outDir", cfg.out_dir);
  put("K", std::to_string(cfg.bath_qubits));
  {
    std::string cs;
    for (std::size_t k = 0; k < cfg.couplings.size(); ++k)
      cs += (k ? "," : "") + format_number(cfg.couplings[k]);
    put("couplings", cs);
  }
  put("gScale", format_number(cfg.g_scale));
  put("gMin", format_number(cfg.g_min));
  put("gMax", format_number(cfg.g_max));
  put("systemSplitting", format_number(cfg.system_splitting));
  put("systemBias", format_number(cfg.system_bias));
  put("bathState", cfg.bath_state);
  put("bathAngle", format_number(cfg.bath_angle));
  put("initialPhi", cfg.initial_phi);
  put("drive", cfg.drive);
  put("driveRate", format_number(cfg.drive_rate));
  put("gridN", std::to_string(cfg.grid_n));
  put("gridNB", std::to_string(cfg.grid_n_b));
  put("gridLength", format_number(cfg.grid_length));
  put("mass", format_number(cfg.mass));
  put("massB", format_number(cfg.mass_b));
  put("qProduct", format_number(cfg.q_product));
  put("softening", format_number(cfg.softening));
  put("boundary", cfg.boundary);
  put("kinetic", cfg.kinetic);
  put("potential", cfg.potential);
  put("omega", format_number(cfg.omega));
  put("forceSlope", format_number(cfg.force_slope));
  put("packetCenter", format_number(cfg.packet_center));
  put("packetMomentum", format_number(cfg.packet_momentum));
  put("packetWidth", format_number(cfg.packet_width));
  put("packetCenterB", format_number(cfg.packet_center_b));
  put("packetMomentumB", format_number(cfg.packet_momentum_b));
  put("packetWidthB", format_number(cfg.packet_width_b));
  put("branches", std::to_string(cfg.n_branches));
  put("basis", cfg.basis);
  put("weightMode", cfg.weight_mode);
  put("selectionWindow", std::to_string(cfg.selection_window));
  put("profileCenter", format_number(cfg.profile_center));
  put("profileCurvature", format_number(cfg.profile_curvature));
  put("envelopeWidth", format_number(cfg.envelope_width));
  put("offdiagThreshold", format_number(cfg.offdiag_threshold));
  put("checkFilter", cfg.check_filter);
  put("maxJointDim", std::to_string(cfg.max_joint_dim));
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

// ---------------------------------------------------------------------------
// shared pieces

namespace {

StateVector gaussian_packet(const Grid1D& grid, double center, double momentum, double width,
                            double hbar) {
  StateVector phi(grid.n);
  for (Eigen::Index i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    const double arg = momentum * x / hbar;
    phi[i] = std::exp(-(x - center) * (x - center) / (4.0 * width * width)) *
             Complex(std::cos(arg), std::sin(arg));
  }
  phi.normalize();
  return phi;
}

StateVector qubit_state(double c0, double c1) {
  StateVector v(2);
  v << c0, c1;
  v.normalize();
  return v;
}

std::vector<double> resolve_couplings(const ScenarioConfig& cfg, int count) {
  std::vector<double> gs;
  if (!cfg.couplings.empty()) {
    if (static_cast<int>(cfg.couplings.size()) < count)
      throw ConfigError("couplings list shorter than K");
    gs.assign(cfg.couplings.begin(), cfg.couplings.begin() + count);
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(cfg.g_min, cfg.g_max);
    for (int k = 0; k < count; ++k) gs.push_back(u(rng));
  }
  for (double& g : gs) g *= cfg.g_scale;
  return gs;
}

Method method_of(const ScenarioConfig& cfg) {
  return cfg.method == "split" ? Method::SplitSecondOrder : Method::Krylov;
}

PropagatorConfig propagator_of(const ScenarioConfig& cfg) {
  PropagatorConfig p;
  p.dt = cfg.dt;
  p.hbar = cfg.hbar;
  p.method = method_of(cfg);
  p.max_joint_dim = cfg.max_joint_dim;
  return p;
}

void write_lines(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

void write_echo(const ScenarioConfig& cfg, const std::string& path) {
  std::string text;
  for (const auto& [k, v] : cfg.echo) text += k + "=" + v + "\n";
  write_lines(path, text);
}

json metrics_to_json(const MetricList& metrics) {
  json j = json::object();
  for (const auto& [k, v] : metrics) j[k] = v;
  return j;
}

double time_average(const std::vector<double>& times, const std::vector<double>& values) {
  if (values.size() < 2) return values.empty() ? 0.0 : values.front();
  double acc = 0.0;
  for (std::size_t j = 1; j < values.size(); ++j)
    acc += 0.5 * (times[j] - times[j - 1]) * (values[j - 1] + values[j]);
  return acc / (times.back() - times.front());
}

// Merged mean-field + exact-joint loop shared by dephasing and grid2body.
struct PairedRun {
  TrajectoryRecord traj;           // mean-field series + coherence from the exact state
  MeanFieldState final_state;
  StateVector final_exact;
  double min_fidelity = 1.0;
  double max_gauge_residual = 0.0;
  double max_imag_residual = 0.0;
  double exact_energy_drift = 0.0;
};

PairedRun run_paired(const HamiltonianSpec& spec, const StateVector& phi0,
                     const StateVector& psi0, const ScenarioConfig& cfg,
                     const DriveScale& drive, const DriveScale& drive_rate) {
  PairedRun out;
  PropagatorConfig pcfg = propagator_of(cfg);
  const long steps = std::lround(cfg.total_time / cfg.dt);

  MeanFieldState mf = make_meanfield_state(phi0, psi0, spec, 0.0, drive ? drive(0.0) : 1.0);
  StateVector joint = tensor_product(phi0, psi0, cfg.max_joint_dim);
  JointPropagator prop(spec, pcfg);

  const bool has_grid = spec.grid_a.has_value();
  Operator p_op, t_op;
  if (has_grid) {
    p_op = grid_momentum(*spec.grid_a, spec.hbar);
    t_op = grid_kinetic(*spec.grid_a, spec.hbar);
  }
  std::vector<StateVector> pointer_basis;
  for (Eigen::Index i = 0; i < spec.dim_a(); ++i) {
    StateVector e = StateVector::Zero(spec.dim_a());
    e[i] = 1.0;
    pointer_basis.push_back(std::move(e));
  }

  const double e_exact0 =
      (joint.adjoint() * spec.apply_joint(joint, drive ? drive(0.0) : 1.0)).value().real();

  auto sample = [&](const MeanFieldState& s, const StateVector& jt) {
    auto& traj = out.traj;
    const double t = s.t;
    const double scale = drive ? drive(t) : 1.0;
    traj.times.push_back(t);
    traj.norms.push_back(s.phi.norm());
    traj.lambda.push_back(s.lambda);
    traj.Lambda.push_back(s.Lambda);
    const Operator v = mean_field_potential(spec, s.psi, t, scale).v;
    const double h_expect = (s.phi.adjoint() * (spec.h_a * s.phi + v * s.phi)).value().real();
    traj.energy.push_back(h_expect - s.lambda);
    {
      // <dV/dt> = drive-ramp part + bath-motion part (see run_meanfield)
      const double rate = drive_rate ? drive_rate(t) : 0.0;
      double dv = 0.0;
      if (spec.dim_b() > 1 || rate != 0.0) {
        const Operator h_psi = spec.h_b + mean_field_potential_b(spec, s.phi, t, scale).v;
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
    // decoherence metric from the exact state
    const Operator rho = reduced_coherence(jt, spec.space(), pointer_basis);
    traj.coherence.push_back(spec.dim_a() == 2 ? std::abs(rho(0, 1)) : purity(rho));
    if (has_grid) {
      traj.momentum.push_back(momentum_with_operator(s.phi, p_op));
      traj.center_of_mass.push_back(center_of_mass(s.phi, *spec.grid_a));
      Eigen::VectorXd vd(v.rows());
      for (Eigen::Index i = 0; i < v.rows(); ++i) vd[i] = v(i, i).real() + spec.h_a(i, i).real();
      traj.force.push_back(spec.grid_a->kinetic == KineticKind::Spectral
                               ? commutator_force(s.phi, vd, p_op, spec.hbar)
                               : lattice_force(s.phi, vd, *spec.grid_a));
      const double p = traj.momentum.back();
      const double p2 = 2.0 * spec.grid_a->mass * (s.phi.adjoint() * t_op * s.phi).value().real();
      traj.dispersion.push_back(p2 - p * p);
    }
    out.min_fidelity = std::min(out.min_fidelity, meanfield_fidelity(jt, s));
    out.max_gauge_residual = std::max(out.max_gauge_residual, lambda_gauge_residual(s, spec, scale));
    out.max_imag_residual = std::max(out.max_imag_residual, lambda_imag_residual(s, spec, scale));
    if (!drive) {
      const double e_exact = (jt.adjoint() * spec.apply_joint(jt)).value().real();
      out.exact_energy_drift = std::max(out.exact_energy_drift, std::abs(e_exact - e_exact0));
    }
  };

  sample(mf, joint);
  for (long step = 1; step <= steps; ++step) {
    const MeanFieldState next = tdh_step(mf, spec, cfg.dt, pcfg, drive);
    out.traj.step_overlap.push_back(overlap(mf.phi, next.phi));
    mf = next;
    joint = prop.step(joint);
    sample(mf, joint);
  }
  out.final_state = mf;
  out.final_exact = joint;
  out.traj.check_consistent();
  return out;
}

// Two-branch sigma_z ensemble bookkeeping for the dephasing family.
struct BranchStudyOut {
  std::vector<double> offdiag_series;
  double time_avg_offdiag = 0.0;
  double max_offdiag_final = 0.0;
  PhaseSpread spread;
  int nu_c = 0;
};

BranchStudyOut run_dephasing_branches(const HamiltonianSpec& spec, const StateVector& phi0,
                                      const StateVector& psi0, const ScenarioConfig& cfg) {
  BranchStudyOut out;
  const PropagatorConfig pcfg = propagator_of(cfg);
  std::vector<StateVector> basis =
      make_branch_basis(spec, cfg.basis == "energy" ? BasisKind::Energy : BasisKind::Pointer);
  const StateVector joint0 = tensor_product(phi0, psi0, cfg.max_joint_dim);
  BranchEnsemble ens = init_branches(joint0, spec.space(), basis, psi0, cfg.hbar,
                                     cfg.weight_mode == "amplitude" ? WeightMode::Amplitude
                                                                    : WeightMode::ModSquared);
  const long steps = std::lround(cfg.total_time / cfg.dt);
  std::vector<double> times;
  for (long s = 0; s <= steps; ++s) {
    if (s > 0) evolve_branches(ens, spec, cfg.dt, 1, pcfg);
    times.push_back(double(s) * cfg.dt);
    out.offdiag_series.push_back(max_offdiagonal_overlap(ens));
  }
  out.time_avg_offdiag = time_average(times, out.offdiag_series);
  out.max_offdiag_final = out.offdiag_series.back();
  out.spread = phase_spread(ens);
  out.nu_c = select_dominant(ens, ens.common_time()).nu_c;
  return out;
}

void write_summary(const std::string& path, const ScenarioConfig& cfg, const MetricList& metrics,
                   const json& extra = json::object()) {
  json j;
  j["schemaVersion"] = 1;
  j["scenario"] = cfg.scenario;
  j["seed"] = cfg.seed;
  j["results"] = metrics_to_json(metrics);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_lines(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// presets

ScenarioOutcome scenario_dephasing(const ScenarioConfig& cfg) {
  const std::vector<double> gs = resolve_couplings(cfg, cfg.bath_qubits);
  const Operator h_sys = cfg.system_splitting * pauli_x() + cfg.system_bias * pauli_z();
  HamiltonianSpec spec = build_dephasing_model(cfg.bath_qubits, gs, h_sys, cfg.max_joint_dim);
  spec.hbar = cfg.hbar;

  const double theta = cfg.bath_state == "plus" ? M_PI / 4.0 : cfg.bath_angle;
  StateVector psi0 = qubit_state(std::cos(theta), std::sin(theta));
  for (int k = 1; k < cfg.bath_qubits; ++k)
    psi0 = tensor_product(psi0, qubit_state(std::cos(theta), std::sin(theta)), cfg.max_joint_dim);

  StateVector phi0;
  if (cfg.initial_phi == "zero")
    phi0 = qubit_state(1.0, 0.0);
  else if (cfg.initial_phi == "one")
    phi0 = qubit_state(0.0, 1.0);
  else
    phi0 = qubit_state(1.0, 1.0);

  DriveScale drive, drive_rate;
  if (cfg.drive == "ramp") {
    const double r = cfg.drive_rate;
    drive = [r](double t) { return 1.0 + r * t; };
    drive_rate = [r](double) { return r; };
  }

  PairedRun run = run_paired(spec, phi0, psi0, cfg, drive, drive_rate);
  BranchStudyOut branches = run_dephasing_branches(spec, phi0, psi0, cfg);

  const EnergyLedger ledger = energy_ledger(run.traj);
  const double action_resid = action_dissipation_residual(run.traj, cfg.hbar);
  double el_max_drift = 0.0;  // pointwise script-E + lambda drift (static V only)
  if (!drive) {
    const double el0 = run.traj.energy.front() + run.traj.lambda.front();
    for (std::size_t j = 0; j < run.traj.size(); ++j)
      el_max_drift = std::max(el_max_drift,
                              std::abs(run.traj.energy[j] + run.traj.lambda[j] - el0));
  }

  MetricList metrics = {
      {"finalTime", run.traj.t_end()},
      {"lambdaGaugeMaxResidual", run.max_gauge_residual},
      {"lambdaImagMaxResidual", run.max_imag_residual},
      {"firstLawResidual", ledger.residual},
      {"heatOut", ledger.heat_out},
      {"energyPlusLambdaDrift", el_max_drift},
      {"actionResidual", action_resid},
      {"LambdaFinal", run.traj.Lambda.back()},
      {"meanFieldFidelityMin", run.min_fidelity},
      {"timeAvgCoherence", time_average(run.traj.times, run.traj.coherence)},
      {"timeAvgOffDiag", branches.time_avg_offdiag},
      {"maxOffDiag", branches.max_offdiag_final},
      {"phaseDensity", branches.spread.density},
      {"phaseSpreadRate", branches.spread.spread_rate},
      {"nuC", double(branches.nu_c)},
      {"exactEnergyDrift", run.exact_energy_drift},
  };

  json extra;
  extra["validity"] = {
      {"offDiagBelowThreshold", branches.max_offdiag_final < cfg.offdiag_threshold},
      {"phaseSpreadNonzero", branches.spread.spread_rate > 0.0},
  };

  ScenarioOutcome out;
  out.metrics = metrics;
  out.trajectory_path = (fs::path(cfg.out_dir) / "trajectory.csv").string();
  out.summary_path = (fs::path(cfg.out_dir) / "summary.json").string();
  write_trajectory_csv(out.trajectory_path, run.traj);
  write_summary(out.summary_path, cfg, metrics, extra);
  write_echo(cfg, (fs::path(cfg.out_dir) / "config.echo").string());
  return out;
}

ScenarioOutcome scenario_grid2body(const ScenarioConfig& cfg) {
  GridPairParams p;
  p.n_a = cfg.grid_n;
  p.n_b = cfg.grid_n_b;
  p.mass_a = cfg.mass;
  p.mass_b = cfg.mass_b;
  p.q_product = cfg.q_product;
  p.spacing = cfg.grid_length / double(cfg.grid_n);
  p.softening = cfg.softening > 0.0 ? cfg.softening : p.spacing;
  p.boundary = cfg.boundary == "dirichlet" ? Boundary::Dirichlet : Boundary::Periodic;
  p.hbar = cfg.hbar;
  p.trap_omega_a = cfg.potential == "harmonic" ? cfg.omega : 0.0;
  p.trap_omega_b = cfg.potential == "harmonic" ? cfg.omega : 0.0;
  p.max_joint_dim = cfg.max_joint_dim;
  const HamiltonianSpec spec = build_grid_pair(p);

  const StateVector phi0 = gaussian_packet(*spec.grid_a, cfg.packet_center, cfg.packet_momentum,
                                           cfg.packet_width, cfg.hbar);
  const StateVector psi0 = gaussian_packet(*spec.grid_b, cfg.packet_center_b,
                                           cfg.packet_momentum_b, cfg.packet_width_b, cfg.hbar);

  PairedRun run = run_paired(spec, phi0, psi0, cfg, {}, {});
  const EnergyLedger ledger = energy_ledger(run.traj);
  const double action_resid = action_dissipation_residual(run.traj, cfg.hbar);
  const double newton = newton_residual(run.traj);
  double el_max_drift = 0.0;
  {
    const double el0 = run.traj.energy.front() + run.traj.lambda.front();
    for (std::size_t j = 0; j < run.traj.size(); ++j)
      el_max_drift =
          std::max(el_max_drift, std::abs(run.traj.energy[j] + run.traj.lambda[j] - el0));
  }

  MetricList metrics = {
      {"finalTime", run.traj.t_end()},
      {"lambdaGaugeMaxResidual", run.max_gauge_residual},
      {"firstLawResidual", ledger.residual},
      {"heatOut", ledger.heat_out},
      {"energyPlusLambdaDrift", el_max_drift},
      {"actionResidual", action_resid},
      {"newtonResidual", newton},
      {"meanFieldFidelityMin", run.min_fidelity},
      {"finalPurity", run.traj.coherence.back()},
      {"exactEnergyDrift", run.exact_energy_drift},
  };

  ScenarioOutcome out;
  out.metrics = metrics;
  out.trajectory_path = (fs::path(cfg.out_dir) / "trajectory.csv").string();
  out.summary_path = (fs::path(cfg.out_dir) / "summary.json").string();
  write_trajectory_csv(out.trajectory_path, run.traj);
  write_summary(out.summary_path, cfg, metrics);
  write_echo(cfg, (fs::path(cfg.out_dir) / "config.echo").string());
  return out;
}

ScenarioOutcome scenario_classical_limit(const ScenarioConfig& cfg) {
  Grid1D grid;
  grid.n = cfg.grid_n;
  grid.spacing = cfg.grid_length / double(cfg.grid_n);
  grid.mass = cfg.mass;
  grid.boundary = cfg.boundary == "dirichlet" ? Boundary::Dirichlet : Boundary::Periodic;
  grid.kinetic = cfg.kinetic == "spectral" ? KineticKind::Spectral : KineticKind::SecondDifference;

  Potential1D v_fn, f_fn;
  if (cfg.potential == "free") {
    v_fn = [](double) { return 0.0; };
    f_fn = [](double) { return 0.0; };
  } else if (cfg.potential == "linear") {
    const double slope = cfg.force_slope;
    v_fn = [slope](double q) { return slope * q; };
    f_fn = [slope](double) { return -slope; };
  } else if (cfg.potential == "quartic") {
    const double c = 0.25 * cfg.mass * cfg.omega * cfg.omega;
    v_fn = [c](double q) { return c * q * q * q * q; };
    f_fn = [c](double q) { return -4.0 * c * q * q * q; };
  } else {
    const double mw2 = cfg.mass * cfg.omega * cfg.omega;
    v_fn = [mw2](double q) { return 0.5 * mw2 * q * q; };
    f_fn = [mw2](double q) { return -mw2 * q; };
  }
  Eigen::VectorXd v_diag(grid.n);
  for (Eigen::Index i = 0; i < grid.n; ++i) v_diag[i] = v_fn(grid.x(i));
  const HamiltonianSpec spec = build_external_grid(grid, v_diag, cfg.hbar);

  const StateVector phi0 =
      gaussian_packet(grid, cfg.packet_center, cfg.packet_momentum, cfg.packet_width, cfg.hbar);
  StateVector psi0 = StateVector::Ones(1);

  MeanFieldRunOptions opts;
  opts.dt = cfg.dt;
  opts.total_time = cfg.total_time;
  opts.propagator = propagator_of(cfg);
  const MeanFieldRun run = run_meanfield(spec, make_meanfield_state(phi0, psi0, spec), opts);

  // classical comparison on the same time grid
  const auto ehr = ehrenfest_trajectory(run.traj, cfg.mass);
  const auto cls =
      classical_oracle({ehr.front().q, ehr.front().p, cfg.mass}, v_fn, cfg.total_time, cfg.dt, f_fn);
  double q_scale = 0.0, p_scale = 0.0, dq = 0.0, dp = 0.0;
  for (std::size_t j = 0; j < std::min(ehr.size(), cls.size()); ++j) {
    q_scale = std::max(q_scale, std::abs(cls[j].q));
    p_scale = std::max(p_scale, std::abs(cls[j].p));
  }
  for (std::size_t j = 0; j < std::min(ehr.size(), cls.size()); ++j) {
    dq = std::max(dq, std::abs(ehr[j].q - cls[j].q));
    dp = std::max(dp, std::abs(ehr[j].p - cls[j].p));
  }
  const double rel_q = dq / std::max(q_scale, 1e-12);
  const double rel_p = dp / std::max(p_scale, 1e-12);

  const double newton = newton_residual(run.traj);
  double el_max_drift = 0.0, disp_drift = 0.0;
  const double el0 = run.traj.energy.front() + run.traj.lambda.front();
  for (std::size_t j = 0; j < run.traj.size(); ++j) {
    el_max_drift =
        std::max(el_max_drift, std::abs(run.traj.energy[j] + run.traj.lambda[j] - el0));
    disp_drift = std::max(disp_drift, std::abs(run.traj.dispersion[j] - run.traj.dispersion[0]));
  }
  const double action_resid = action_dissipation_residual(run.traj, cfg.hbar);

  // coherence column: single pure factor, constant 1 by construction
  TrajectoryRecord traj = run.traj;
  traj.coherence.assign(traj.size(), 1.0);

  MetricList metrics = {
      {"finalTime", traj.t_end()},
      {"ehrenfestMaxRelQ", rel_q},
      {"ehrenfestMaxRelP", rel_p},
      {"newtonResidual", newton},
      {"energyPlusLambdaDrift", el_max_drift},
      {"actionResidual", action_resid},
      {"dispersionDrift", disp_drift},
      {"LambdaFinal", traj.Lambda.back()},
  };
  if (grid.boundary == Boundary::Periodic) {
    const TranslationBalance tb = translation_decomposition(traj, grid, grid.spacing);
    metrics.push_back({"translationBoundary", tb.boundary_term});
    metrics.push_back({"translationBulk", tb.bulk_term});
    metrics.push_back({"translationResidual", std::abs(tb.boundary_term + tb.bulk_term)});
  }

  ScenarioOutcome out;
  out.metrics = metrics;
  out.trajectory_path = (fs::path(cfg.out_dir) / "trajectory.csv").string();
  out.summary_path = (fs::path(cfg.out_dir) / "summary.json").string();
  write_trajectory_csv(out.trajectory_path, traj);
  write_summary(out.summary_path, cfg, metrics);
  write_echo(cfg, (fs::path(cfg.out_dir) / "config.echo").string());
  return out;
}

ScenarioOutcome scenario_branch_study(const ScenarioConfig& cfg) {
  const int n_sites = cfg.n_branches;
  const int k_bath = cfg.bath_qubits;
  const std::vector<double> gs = resolve_couplings(cfg, k_bath);

  // L-site pointer chain coupled to the bath through a quadratic site profile.
  const double x0 = cfg.profile_center >= 0.0 ? cfg.profile_center : 0.5;
  Eigen::VectorXcd site_profile(n_sites);
  for (int nu = 0; nu < n_sites; ++nu) {
    const double x = double(nu) / double(n_sites - 1) - x0;
    site_profile[nu] = cfg.profile_curvature * x * x;
  }
  HamiltonianSpec spec;
  spec.hbar = cfg.hbar;
  spec.h_a = Operator::Zero(n_sites, n_sites);
  const Eigen::Index dim_b = Eigen::Index(1) << k_bath;
  if (n_sites * dim_b > cfg.max_joint_dim)
    throw CapacityExceeded("branch-study: joint dimension exceeds capacity");
  spec.h_b = Operator::Zero(dim_b, dim_b);
  for (int k = 0; k < k_bath; ++k) {
    Eigen::VectorXcd diag(dim_b);
    const Eigen::Index stride = dim_b >> (k + 1);
    for (Eigen::Index b = 0; b < dim_b; ++b) diag[b] = ((b / stride) % 2 == 0) ? 1.0 : -1.0;
    ProductTerm term;
    term.coupling = gs[k];
    term.op_a = site_profile.asDiagonal();
    term.op_b = diag.asDiagonal();
    spec.interaction.push_back(std::move(term));
  }
  spec.validate();
  spec.compile();

  const double theta = cfg.bath_state == "plus" ? M_PI / 4.0 : cfg.bath_angle;
  StateVector psi0 = qubit_state(std::cos(theta), std::sin(theta));
  for (int k = 1; k < k_bath; ++k)
    psi0 = tensor_product(psi0, qubit_state(std::cos(theta), std::sin(theta)), cfg.max_joint_dim);

  // initial A-state: Gaussian weight envelope over sites
  const double width = cfg.envelope_width > 0.0 ? cfg.envelope_width : 0.35;
  StateVector phi0(n_sites);
  for (int nu = 0; nu < n_sites; ++nu) {
    const double x = double(nu) / double(n_sites - 1) - x0;
    phi0[nu] = std::exp(-x * x / (2.0 * width * width));
  }
  phi0.normalize();
  const StateVector joint0 = tensor_product(phi0, psi0, cfg.max_joint_dim);

  std::vector<StateVector> basis =
      make_branch_basis(spec, cfg.basis == "energy" ? BasisKind::Energy : BasisKind::Pointer);
  BranchEnsemble ens = init_branches(joint0, spec.space(), basis, psi0, cfg.hbar,
                                     cfg.weight_mode == "amplitude" ? WeightMode::Amplitude
                                                                    : WeightMode::ModSquared);
  const PropagatorConfig pcfg = propagator_of(cfg);
  const long steps = std::lround(cfg.total_time / cfg.dt);

  TrajectoryRecord traj;
  std::vector<double> offdiag_series;
  auto sample = [&](long s) {
    const double t = double(s) * cfg.dt;
    traj.times.push_back(t);
    const StateVector pw = partial_wave(ens);
    traj.norms.push_back(pw.norm());
    double wsum = 0.0, lam = 0.0, Lam = 0.0;
    std::vector<double> weights(ens.size()), Lambdas(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
      weights[i] = ens.weight(i);
      Lambdas[i] = ens.branches[i].state.Lambda;
      wsum += weights[i];
      lam += weights[i] * ens.branches[i].state.lambda;
      Lam += weights[i] * Lambdas[i];
    }
    traj.lambda.push_back(lam / wsum);
    traj.Lambda.push_back(Lam / wsum);
    traj.coherence.push_back(std::abs(interference_kernel(weights, Lambdas, cfg.hbar)) / wsum);
    offdiag_series.push_back(ens.size() > 1 ? max_offdiagonal_overlap(ens) : 0.0);
  };

  sample(0);
  for (long s = 1; s <= steps; ++s) {
    evolve_branches(ens, spec, cfg.dt, 1, pcfg);
    sample(s);
  }
  traj.check_consistent();

  const PhaseSpread spread = phase_spread(ens);
  const SelectionDiagnostics sel = select_dominant(ens, ens.common_time());
  const int oracle_pick = oracles::windowed_kernel_argmax(
      sel.weights, sel.Lambdas, cfg.hbar, cfg.selection_window);

  // neighbors in a smooth profile stay overlapping; the mean over all pairs
  // shows the suppression of the separated ones
  double mean_offdiag = 0.0;
  if (ens.size() > 1) {
    const Operator omega = offdiagonal_overlaps(ens);
    long pairs = 0;
    for (Eigen::Index i = 0; i < omega.rows(); ++i)
      for (Eigen::Index j = 0; j < omega.cols(); ++j)
        if (i != j) {
          mean_offdiag += std::abs(omega(i, j));
          ++pairs;
        }
    mean_offdiag /= double(pairs);
  }

  MetricList metrics = {
      {"finalTime", traj.t_end()},
      {"nuC", double(sel.nu_c)},
      {"windowedOraclePick", double(oracle_pick)},
      {"expectedVertex", x0 * double(n_sites - 1)},
      {"partialWaveNormFinal", traj.norms.back()},
      {"kernelFinal", traj.coherence.back()},
      {"timeAvgOffDiag", time_average(traj.times, offdiag_series)},
      {"maxOffDiag", offdiag_series.back()},
      {"meanOffDiag", mean_offdiag},
      {"phaseDensity", spread.density},
      {"phaseSpreadRate", spread.spread_rate},
      {"weightSum", ens.weight_sum()},
  };

  json extra;
  extra["validity"] = {
      {"offDiagBelowThreshold", offdiag_series.back() < cfg.offdiag_threshold},
      {"phaseSpreadNonzero", spread.spread_rate > 0.0},
      {"selectionMatchesOracle", sel.nu_c == oracle_pick},
  };

  ScenarioOutcome out;
  out.metrics = metrics;
  out.trajectory_path = (fs::path(cfg.out_dir) / "trajectory.csv").string();
  out.summary_path = (fs::path(cfg.out_dir) / "summary.json").string();
  write_trajectory_csv(out.trajectory_path, traj);
  write_summary(out.summary_path, cfg, metrics, extra);
  write_echo(cfg, (fs::path(cfg.out_dir) / "config.echo").string());
  return out;
}

}  // namespace

ScenarioOutcome write_check_artifacts(const ScenarioConfig& cfg,
                                      const std::vector<oracles::OracleReport>& reports) {
  json jreports = json::array();
  bool all = true;
  MetricList metrics;
  for (const auto& r : reports) {
    jreports.push_back({{"name", r.name},
                        {"maxAbsError", r.max_abs_error},
                        {"threshold", r.threshold},
                        {"samples", r.samples},
                        {"seed", r.seed},
                        {"passed", r.passed}});
    all = all && r.passed;
    metrics.push_back({r.name, r.max_abs_error});
  }
  json extra;
  extra["reports"] = jreports;
  extra["allPassed"] = all;

  ScenarioOutcome out;
  out.metrics = metrics;
  out.trajectory_path = (fs::path(cfg.out_dir) / "trajectory.csv").string();
  out.summary_path = (fs::path(cfg.out_dir) / "summary.json").string();
  write_trajectory_csv(out.trajectory_path, TrajectoryRecord{});
  write_summary(out.summary_path, cfg, metrics, extra);
  write_echo(cfg, (fs::path(cfg.out_dir) / "config.echo").string());
  return out;
}

namespace {

ScenarioOutcome scenario_check(const ScenarioConfig& cfg) {
  const auto reports = oracles::run_battery(cfg.check_filter);
  ScenarioOutcome out = write_check_artifacts(cfg, reports);
  for (const auto& r : reports)
    if (!r.passed) throw IntegratorDiverged("check: oracle check '" + r.name + "' failed");
  return out;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj) {
  std::string text = "t,norm,lambda,Lambda,px,energy,coherence,qCoM\n";
  auto at = [](const std::vector<double>& v, std::size_t j) {
    return j < v.size() ? v[j] : 0.0;
  };
  for (std::size_t j = 0; j < traj.size(); ++j) {
    text += format_number(traj.times[j]);
    text += ',';
    text += format_number(at(traj.norms, j));
    text += ',';
    text += format_number(at(traj.lambda, j));
    text += ',';
    text += format_number(at(traj.Lambda, j));
    text += ',';
    text += format_number(at(traj.momentum, j));
    text += ',';
    text += format_number(at(traj.energy, j));
    text += ',';
    text += format_number(at(traj.coherence, j));
    text += ',';
    text += format_number(at(traj.center_of_mass, j));
    text += '\n';
  }
  write_lines(path, text);
}

ScenarioOutcome run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.scenario == "dephasing") return scenario_dephasing(cfg);
  if (cfg.scenario == "grid2body") return scenario_grid2body(cfg);
  if (cfg.scenario == "classical-limit") return scenario_classical_limit(cfg);
  if (cfg.scenario == "branch-study") return scenario_branch_study(cfg);
  if (cfg.scenario == "check") return scenario_check(cfg);
  throw ConfigError("unknown scenario '" + cfg.scenario + "'");
}

ScenarioOutcome run_sweep(const ScenarioConfig& base, const std::string& parameter,
                          const std::vector<std::string>& values) {
  static const std::vector<std::string> sweepable = {"K", "gScale", "dt", "branches"};
  if (std::find(sweepable.begin(), sweepable.end(), parameter) == sweepable.end())
    throw ConfigError("sweep: parameter '" + parameter + "' is not sweep-enabled (K, gScale, dt, branches)");
  if (values.empty()) throw ConfigError("sweep: empty value list");

  std::vector<ScenarioConfig> cfgs;
  for (const std::string& v : values) {
    ScenarioConfig c = base;
    if (parameter == "K")
      c.bath_qubits = int(parse_int("sweep", 0, "K", v));
    else if (parameter == "gScale")
      c.g_scale = parse_double("sweep", 0, "gScale", v);
    else if (parameter == "dt")
      c.dt = parse_double("sweep", 0, "dt", v);
    else
      c.n_branches = int(parse_int("sweep", 0, "branches", v));
    c.out_dir = (fs::path(base.out_dir) / (parameter + "=" + v)).string();
    c.echo[parameter] = v;
    c.echo["outDir"] = c.out_dir;
    c.validate();
    cfgs.push_back(std::move(c));
  }

  std::vector<ScenarioOutcome> results(cfgs.size());
  std::vector<std::string> errors(cfgs.size());
  parallel_for_indices(cfgs.size(), [&](std::size_t i) { results[i] = run_scenario(cfgs[i]); });

  // single-threaded reduction
  std::string csv = "param,value";
  for (const auto& [name, _] : results.front().metrics) csv += "," + name;
  csv += "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    csv += parameter + "," + values[i];
    for (const auto& [_, val] : results[i].metrics) csv += "," + format_number(val);
    csv += "\n";
  }
  const std::string sweep_path = (fs::path(base.out_dir) / "sweep.csv").string();
  write_lines(sweep_path, csv);

  ScenarioOutcome out;
  out.metrics = results.back().metrics;
  out.summary_path = sweep_path;
  out.trajectory_path = sweep_path;
  return out;
}

}  // namespace branchsim
