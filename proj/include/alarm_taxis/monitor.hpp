#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alarm_taxis/model.hpp"

namespace alarm_taxis {

enum class Regime { classical, full, regularized };

std::string to_string(Regime r);
/// Throws std::invalid_argument for unknown names.
Regime parse_regime(const std::string& name);

/// Audited quantities at one time level. Cumulative entries are trapezoid sums from t = 0.
struct MonitorRecord {
  double t = 0.0;
  double dt = 0.0;
  double mass_u = 0.0, mass_v = 0.0, mass_w = 0.0;
  double comb_mass = 0.0;
  double sup_u = 0.0, sup_v = 0.0, sup_w = 0.0;
  double l2_u = 0.0, l2_v = 0.0, l2_w = 0.0;
  double grad_u_sq = 0.0;
  double grad_v_sq = 0.0;
  double grad_uv_sq = 0.0;
  double logw_grad_sq = 0.0;
  double lap_u_sq = 0.0;
  double h_integral = 0.0;
  /// int |-xi div(S(v) grad u) + g|^(6/5) at this time level.
  double force_v_l65 = 0.0;
  /// The same quantity integrated over the step that ended here.
  double rhs_v_l65 = 0.0;
  double cum_lap_u_sq = 0.0;
  double cum_grad_v_sq = 0.0;
  double cum_grad_uv_sq = 0.0;
  double cum_logw_grad_sq = 0.0;
  double cum_rhs_v_l65 = 0.0;
  double cum_h = 0.0;
  std::optional<double> gn_ratio_u;
  /// Named slack values (bound - value); all finite.
  std::vector<std::pair<std::string, double>> bound_margins;

  std::optional<double> margin(const std::string& name) const;

  friend bool operator==(const MonitorRecord&, const MonitorRecord&) = default;
};

/// Closed-form bounds fixed by the initial data and the parameters.
struct BoundSet {
  double l1 = 0.0;
  double u_bar = 0.0;
  std::optional<double> v_bar;
  std::optional<double> w_bar;
};

BoundSet compute_bounds(const StateTriple& initial, const Params& p, Regime regime,
                        std::optional<double> eps);

struct MonitorContext {
  Params params;
  Regime regime = Regime::classical;
  std::optional<CutoffSpec> cutoff;
  CombinationWeights eta;
  BoundSet bounds;
  double mass_w0 = 0.0;
};

MonitorContext make_monitor_context(const StateTriple& initial, const Params& p, Regime regime,
                                    std::optional<double> eps);

/// Computes the record at `state`; `prev` (if any) feeds the trapezoid cumulatives.
MonitorRecord compute_monitor(const StateTriple& state, const MonitorContext& ctx,
                              const MonitorRecord* prev);

/**
 * int |grad f|^4 / (int |lap f|^2 * int |grad f|^2) with face gradients
 * averaged to cells. Empty for (numerically) constant fields.
 */
std::optional<double> gn_ratio(const Field& f);

}  // namespace alarm_taxis
