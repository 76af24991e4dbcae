#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alarm_taxis/model.hpp"
#include "alarm_taxis/monitor.hpp"
#include "alarm_taxis/trajectory.hpp"

namespace alarm_taxis {

inline constexpr double kBoundRelTol = 1e-3;

/// One audited inequality. margin = allowed - observed (with tolerance folded in).
struct AuditEntry {
  std::string name;
  double worst_margin = 0.0;
  double time_of_worst = 0.0;
  bool passed = true;
  std::string note;

  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

struct AuditReport {
  std::vector<AuditEntry> entries;

  bool passed() const;
  void append(const AuditReport& other);
  /// Text table: name, worst-margin, time-of-worst, pass/fail.
  std::string to_text() const;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

/// max{comb_mass(0), 3 lambda |Omega| / mu}.
double l1_bound(double comb_mass0, const Params& p, double measure);

/// comb_mass(t) <= l1_bound * (1 + 1e-3) at every monitor.
AuditReport audit_l1_bound(const Trajectory& traj, const Params& p);

/// Comparison bounds appropriate to the regime, checked on every monitor.
AuditReport audit_sup_bounds(const Trajectory& traj, const Params& p, Regime regime,
                             std::optional<double> eps = std::nullopt);

/// r(t) = int w0 + int_0^t int h - int w(t) on every monitor.
std::vector<std::pair<double, double>> mass_residual_series(const Trajectory& traj);

/// Passes iff r(t) >= -1e-6 (1 + |int w0|) everywhere.
AuditReport audit_mass_inequality(const Trajectory& traj, const Params& p);

struct EnergyRow {
  double t = 0.0;
  double grad_u_sq = 0.0;
  double cum_grad_v_sq = 0.0;
  double cum_grad_uv_sq = 0.0;
  double cum_logw_grad_sq = 0.0;
  double cum_lap_u_sq = 0.0;
  double cum_rhs_v_l65 = 0.0;
};

std::vector<EnergyRow> energy_series(const Trajectory& traj);
std::string energy_table(const std::vector<EnergyRow>& rows);

/// Final cumulative values of one ladder member.
struct EpsLadderEntry {
  double eps = 0.0;
  EnergyRow final_row;
  double sup_v = 0.0;
  double v_bound = 0.0;
};

/// Each cumulative series must satisfy max/min <= factor across the ladder.
AuditReport audit_eps_uniformity(const std::vector<EpsLadderEntry>& ladder, double factor = 2.0);
std::string eps_uniformity_table(const std::vector<EpsLadderEntry>& ladder);

/// Largest logged GN ratio over a trajectory (absent if never defined).
std::optional<double> max_gn_ratio(const Trajectory& traj);

}  // namespace alarm_taxis
