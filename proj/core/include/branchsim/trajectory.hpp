#pragma once

#include <optional>
#include <vector>

#include "branchsim/hilbert.hpp"

namespace branchsim {

// Time series recorded along a run. All populated series have the same length
// as `times`; `step_overlap` is one shorter (it pairs consecutive samples).
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> norms;
  std::vector<double> lambda;        // dissipation rate (energy)
  std::vector<double> Lambda;        // accumulated phase (action)
  std::vector<double> momentum;      // p_x of the A factor (grid runs)
  std::vector<double> energy;        // script-E = <h> - lambda
  std::vector<double> action_increments;
  std::vector<double> coherence;     // scenario-defined coherence metric
  std::vector<double> center_of_mass;
  std::vector<double> force;         // lattice Ehrenfest force (grid runs)
  std::vector<double> drive_power;   // <dV/dt> samples (driven runs)
  std::vector<double> dispersion;    // momentum dispersion of the A factor
  std::vector<Complex> step_overlap; // <phi_j, phi_{j+1}>
  std::vector<StateVector> phi_snapshots;  // optional, for variational checks
  std::optional<Operator> effective_h;     // static h_A + V, recorded with snapshots

  std::size_t size() const { return times.size(); }
  double t_begin() const { return times.empty() ? 0.0 : times.front(); }
  double t_end() const { return times.empty() ? 0.0 : times.back(); }

  void check_consistent() const;  // throws IncompleteTrajectory on ragged series
};

}  // namespace branchsim
