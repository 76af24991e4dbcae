#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "alarm_taxis/config.hpp"
#include "alarm_taxis/diagnostics.hpp"
#include "alarm_taxis/trajectory.hpp"

namespace alarm_taxis {

enum ExitCode : int { kExitOk = 0, kExitAuditFailed = 1, kExitSolverAbort = 2, kExitConfigError = 3 };

struct StudyOptions {
  bool quiet = false;
  std::optional<std::filesystem::path> output_override;
  /// Progress messages go here unless quiet (defaults to std::cerr).
  std::ostream* log = nullptr;
};

struct StudyResult {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::string summary_json;
};

/// Runs the configured study, writing every artifact below the output directory.
StudyResult run_study(const RunConfig& cfg, const StudyOptions& opts = {});

/// The enabled trajectory audits of a single run.
AuditReport run_audits(const Trajectory& traj, const RunConfig& cfg);

/// ALARM_TAXIS_THREADS: unset = hardware concurrency, 0 = sequential, n = at most n workers.
std::size_t worker_cap();

/// Runs tasks on at most `cap` threads; the first exception is rethrown after all finish.
void run_parallel(const std::vector<std::function<void()>>& tasks, std::size_t cap);

/// Re-runs the audits of a run directory (needs run_config.cfg); returns the exit code.
int audit_directory(const std::filesystem::path& dir, std::ostream& out);
/// Evaluates weak-form residuals of a run directory; returns the exit code.
int residuals_directory(const std::filesystem::path& dir, std::ostream& out);

struct OdeComparison {
  double max_deviation = 0.0;
  double time_of_max = 0.0;
  std::size_t samples = 0;
};

/// Spatially constant runs against the kinetic ODE at every monitor time.
OdeComparison compare_with_ode(const Trajectory& traj, const Params& p);

/// The built-in manufactured triple used by the mms study.
ManufacturedSolution builtin_manufactured(const std::string& kind, const GridSpec& grid);

struct LadderLevel {
  std::size_t n = 0;
  double h = 0.0;
  double max_abs_u = 0.0;
  double max_abs_v = 0.0;
  double max_abs_defect = 0.0;
  double min_defect = 0.0;
};

struct LadderOrders {
  std::vector<LadderLevel> levels;
  double order_u = 0.0;
  double order_v = 0.0;
  double order_defect = 0.0;
};

/// Observed orders of the finest pair of levels.
LadderOrders ladder_orders(std::vector<LadderLevel> levels);

}  // namespace alarm_taxis
