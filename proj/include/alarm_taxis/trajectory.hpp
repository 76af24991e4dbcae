#pragma once

#include <cstddef>
#include <vector>

#include "alarm_taxis/model.hpp"
#include "alarm_taxis/monitor.hpp"

namespace alarm_taxis {

struct Trajectory {
  /// Saved states; times strictly increasing, first at 0, last at t_end.
  std::vector<StateTriple> snapshots;
  /// One record at t = 0 and one per accepted step.
  std::vector<MonitorRecord> monitors;
  std::vector<double> dt_history;
  std::size_t rejected_steps = 0;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace alarm_taxis
