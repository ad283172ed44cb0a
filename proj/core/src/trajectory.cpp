#include "branchsim/trajectory.hpp"

#include <sstream>

namespace branchsim {

void TrajectoryRecord::check_consistent() const {
  const std::size_t n = times.size();
  auto check = [&](const char* name, std::size_t len, std::size_t want) {
    if (len != 0 && len != want) {
      std::ostringstream msg;
      msg << "trajectory series '" << name << "' has " << len << " samples, expected " << want;
      throw IncompleteTrajectory(msg.str());
    }
  };
  check("norms", norms.size(), n);
  check("lambda", lambda.size(), n);
  check("Lambda", Lambda.size(), n);
  check("momentum", momentum.size(), n);
  check("energy", energy.size(), n);
  check("coherence", coherence.size(), n);
  check("center_of_mass", center_of_mass.size(), n);
  check("force", force.size(), n);
  check("drive_power", drive_power.size(), n);
  check("dispersion", dispersion.size(), n);
  check("action_increments", action_increments.size(), n);
  check("step_overlap", step_overlap.size(), n > 0 ? n - 1 : 0);
  check("phi_snapshots", phi_snapshots.size(), n);
}

}  // namespace branchsim
