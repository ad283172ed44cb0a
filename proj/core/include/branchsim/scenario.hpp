#pragma once

#include <map>
#include <string>
#include <vector>

#include "branchsim/oracles.hpp"
#include "branchsim/trajectory.hpp"

namespace branchsim {

// Flat key=value configuration for the scenario runner. Unknown keys and type
// mismatches are reported with their line number (ConfigError).
struct ScenarioConfig {
  std::string scenario = "dephasing";  // dephasing | grid2body | classical-limit | branch-study | check
  unsigned long seed = 1;
  double hbar = 1.0;
  double dt = 1e-3;
  double total_time = 1.0;
  std::string method = "krylov";       // krylov | split
  std::string out_dir = "out";

  // dephasing / branch-study bath
  int bath_qubits = 2;
  std::vector<double> couplings;       // empty: draw bath_qubits values in [g_min, g_max]
  double g_scale = 1.0;
  double g_min = 0.05;
  double g_max = 0.15;
  double system_splitting = 0.0;       // sigma_x coefficient of the system qubit
  double system_bias = 0.5;            // sigma_z coefficient
  std::string bath_state = "angled";   // plus | angled
  double bath_angle = 0.35;            // radians; <sigma_z> = cos(2*angle)
  std::string initial_phi = "plus";    // plus | zero | one
  std::string drive = "none";          // none | ramp
  double drive_rate = 0.0;

  // grid scenarios
  Eigen::Index grid_n = 256;
  Eigen::Index grid_n_b = 32;
  double grid_length = 20.0;
  double mass = 1.0;
  double mass_b = 1.0;
  double q_product = 0.0;
  double softening = 0.0;              // 0: defaults to one grid spacing
  std::string boundary = "periodic";   // periodic | dirichlet
  std::string kinetic = "secondDifference";  // secondDifference | spectral
  std::string potential = "harmonic";  // harmonic | free | linear | quartic
  double omega = 1.0;
  double force_slope = 0.0;
  double packet_center = 0.0;
  double packet_momentum = 0.0;
  double packet_width = 1.0;
  double packet_center_b = 0.0;
  double packet_momentum_b = 0.0;
  double packet_width_b = 1.0;

  // branch machinery
  int n_branches = 64;
  std::string basis = "pointer";       // pointer | energy
  std::string weight_mode = "modSquared";  // modSquared | amplitude
  int selection_window = 5;
  double profile_center = -1.0;        // branch-study well center; <0 = middle
  double profile_curvature = 2.0;
  double envelope_width = 0.0;         // initial |alpha| envelope; 0 = broad default
  double offdiag_threshold = 0.1;      // validity flag level for max |Omega|

  std::string check_filter;            // `check` scenario name filter

  Eigen::Index max_joint_dim = kDefaultMaxJointDim;

  std::map<std::string, std::string> echo;  // resolved key=value pairs

  void validate() const;
};

ScenarioConfig parse_config_file(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin);

// Headline numbers a run contributes to sweep.csv.
using MetricList = std::vector<std::pair<std::string, double>>;

struct ScenarioOutcome {
  MetricList metrics;
  std::string summary_path;
  std::string trajectory_path;
};

// Executes one preset and writes trajectory.csv, summary.json and config.echo
// under cfg.out_dir. Throws ConfigError / CapacityExceeded / numerical errors;
// the CLI maps those to exit codes 2 / 4 / 3.
ScenarioOutcome run_scenario(const ScenarioConfig& cfg);

// Writes the check-scenario artifacts for an already-computed report battery.
ScenarioOutcome write_check_artifacts(const ScenarioConfig& cfg,
                                      const std::vector<oracles::OracleReport>& reports);

// One run per value (dispatched across workers), then a single-threaded
// reduction into out_dir/sweep.csv. Swept parameters: K, gScale, dt, branches.
ScenarioOutcome run_sweep(const ScenarioConfig& base, const std::string& parameter,
                          const std::vector<std::string>& values);

// 17-significant-digit, LF-terminated CSV of the standard columns.
void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj);

std::string format_number(double v);  // round-trip-safe "%.17g"

}  // namespace branchsim
