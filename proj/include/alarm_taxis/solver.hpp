#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "alarm_taxis/grid.hpp"
#include "alarm_taxis/mms.hpp"
#include "alarm_taxis/model.hpp"
#include "alarm_taxis/monitor.hpp"
#include "alarm_taxis/trajectory.hpp"

namespace alarm_taxis {

struct SolverConfig {
  double t_end = 1.0;
  double cfl_safety = 0.4;
  Regime regime = Regime::classical;
  /// Required iff regime == regularized.
  std::optional<double> eps;
  double snapshot_interval = 0.1;
  std::optional<MmsDescriptor> mms;
  /// Optional cap on the step size (fixed-step studies).
  std::optional<double> dt_max;

  void validate(const Params& p) const;
  std::optional<CutoffSpec> cutoff() const;
};

/// Thrown when the scheme cannot continue; carries the last monitor records.
class SolverAbort : public std::runtime_error {
 public:
  SolverAbort(const std::string& what, std::vector<MonitorRecord> tail = {})
      : std::runtime_error(what), tail_(std::move(tail)) {}
  const std::vector<MonitorRecord>& tail() const { return tail_; }

 private:
  std::vector<MonitorRecord> tail_;
};

struct StateRates {
  Field du, dv, dw;
};

/// Semi-discrete right-hand side evaluated directly from the grid operators.
StateRates rhs(const StateTriple& state, const Params& p, const SolverConfig& cfg);

struct DtCandidates {
  double diffusion = 0.0;
  double drift = 0.0;
  double kinetic = 0.0;
};

DtCandidates dt_candidates(const StateTriple& state, const Params& p, const SolverConfig& cfg);

/// cfl_safety * min(candidates). Throws SolverAbort below 1e-12 * t_end.
double stable_dt(const StateTriple& state, const Params& p, const SolverConfig& cfg);

/**
 * Largest per-capita transport outflow rate over all species and cells.
 * The update is positive whenever dt times this rate stays <= 1 at both stages.
 */
double max_transport_outflow(const StateTriple& state, const Params& p, const SolverConfig& cfg);

/// One step of size dt; empty if dt breaks the transport positivity limit at either stage.
std::optional<StateTriple> try_step(const StateTriple& state, const Params& p,
                                    const SolverConfig& cfg, double dt);

/// As try_step, but throws SolverAbort when the step is rejected.
StateTriple step(const StateTriple& state, const Params& p, const SolverConfig& cfg, double dt);

/// Called with every accepted state (including the initial one).
using StepObserver = std::function<void(const StateTriple&)>;

Trajectory run(const StateTriple& initial, const Params& p, const SolverConfig& cfg,
               const StepObserver& observer = {});

/// k explicit heat steps with unit coefficient and tau = h_min^2 / 8 on each component.
StateTriple presmooth(const StateTriple& state, std::size_t k);

struct ConvergenceLevel {
  std::size_t n = 0;
  double h = 0.0;
  std::array<double, 3> error_l2{};
  double error_total = 0.0;
  std::size_t steps = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;
  /// log(e_k / e_{k+1}) / log(h_k / h_{k+1}) for consecutive levels.
  std::vector<double> orders;
  double observed_order = 0.0;
  bool monotone = true;
};

/**
 * Runs the manufactured problem on square-cell ladders (n x n, or n x 1 in
 * 1D) over [0, lx] x [0, ly] of the descriptor and measures L2 errors at t_end.
 */
ConvergenceReport mms_run(const MmsDescriptor& descriptor, const Params& p, const SolverConfig& cfg,
                          const std::vector<std::size_t>& ladder, bool one_dimensional = false);

}  // namespace alarm_taxis
