#include "alarm_taxis/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace alarm_taxis {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::classical: return "classical";
    case Regime::full: return "full";
    case Regime::regularized: return "regularized";
  }
  return "unknown";
}

Regime parse_regime(const std::string& name) {
  if (name == "classical") return Regime::classical;
  if (name == "full") return Regime::full;
  if (name == "regularized") return Regime::regularized;
  throw std::invalid_argument("unknown regime '" + name + "' (expected classical, full or regularized)");
}

std::optional<double> MonitorRecord::margin(const std::string& name) const {
  for (const auto& [key, value] : bound_margins)
    if (key == name) return value;
  return std::nullopt;
}

double l1_bound(double comb_mass0, const Params& p, double measure) {
  return std::max(comb_mass0, 3.0 * p.lambda_max() * measure / p.mu_min());
}

BoundSet compute_bounds(const StateTriple& initial, const Params& p, Regime regime,
                        std::optional<double> eps) {
  const CombinationWeights eta = combination_weights(p);
  BoundSet b;
  b.l1 = l1_bound(integrate(initial.u) + eta.eta1 * integrate(initial.v) + eta.eta2 * integrate(initial.w),
                  p, initial.grid().measure());
  b.u_bar = std::max(initial.u.max(), p.lambda1 / p.mu1);
  if (regime == Regime::classical) {
    b.v_bar = std::max(initial.v.max(), (p.lambda2 + p.b1 * b.u_bar) / p.mu2);
  } else if (regime == Regime::regularized) {
    if (!eps) throw std::invalid_argument("compute_bounds: regularized regime needs eps");
    const double cap = 2.0 / *eps;
    b.v_bar = std::max({initial.v.max(), cap, (p.lambda2 + p.b1 * b.u_bar) / p.mu2});
    b.w_bar = std::max({initial.w.max(), cap, (p.lambda3 + p.b2 * b.u_bar + p.b3 * *b.v_bar) / p.mu3});
  }
  return b;
}

MonitorContext make_monitor_context(const StateTriple& initial, const Params& p, Regime regime,
                                    std::optional<double> eps) {
  MonitorContext ctx;
  ctx.params = p;
  ctx.regime = regime;
  if (regime == Regime::regularized && eps) ctx.cutoff = CutoffSpec::make(*eps);
  ctx.eta = combination_weights(p);
  ctx.bounds = compute_bounds(initial, p, regime, eps);
  ctx.mass_w0 = integrate(initial.w);
  return ctx;
}

std::optional<double> gn_ratio(const Field& f) {
  const double lo = f.min(), hi = f.max();
  if (hi - lo <= 1e-14 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) return std::nullopt;
  const CellGradient g = cell_gradient(f);
  const Field lap = laplacian(f);
  const double area = f.grid().cell_area();
  double grad4 = 0.0, grad2 = 0.0, lap2 = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double s = g.gx[k] * g.gx[k] + g.gy[k] * g.gy[k];
    grad2 += s * area;
    grad4 += s * s * area;
    lap2 += lap[k] * lap[k] * area;
  }
  if (!(grad2 > 0.0) || !(lap2 > 0.0)) return std::nullopt;
  return grad4 / (lap2 * grad2);
}

MonitorRecord compute_monitor(const StateTriple& state, const MonitorContext& ctx,
                              const MonitorRecord* prev) {
  const Params& p = ctx.params;
  const GridSpec& g = state.grid();
  const double area = g.cell_area();

  MonitorRecord m;
  m.t = state.t;
  m.dt = prev ? state.t - prev->t : 0.0;
  m.mass_u = integrate(state.u);
  m.mass_v = integrate(state.v);
  m.mass_w = integrate(state.w);
  m.comb_mass = m.mass_u + ctx.eta.eta1 * m.mass_v + ctx.eta.eta2 * m.mass_w;
  const Norms nu = norms(state.u), nv = norms(state.v), nw = norms(state.w);
  m.sup_u = nu.linf;
  m.sup_v = nv.linf;
  m.sup_w = nw.linf;
  m.l2_u = nu.l2;
  m.l2_v = nv.l2;
  m.l2_w = nw.l2;

  const Field uv = hadamard(state.u, state.v);
  m.grad_u_sq = grad_sq_integral(state.u);
  m.grad_v_sq = grad_sq_integral(state.v);
  m.grad_uv_sq = grad_sq_integral(uv);
  Field inv_w1(g);
  for (std::size_t k = 0; k < g.size(); ++k) inv_w1[k] = 1.0 / ((state.w[k] + 1.0) * (state.w[k] + 1.0));
  m.logw_grad_sq = grad_sq_integral(state.w, inv_w1);

  const Field lap_u = laplacian(state.u);
  std::optional<Field> taxis;
  if (p.xi != 0.0) {
    Field carrier = state.v;
    if (ctx.cutoff)
      for (std::size_t k = 0; k < g.size(); ++k) carrier[k] = sigma_eps(state.v[k], *ctx.cutoff);
    taxis = taxis_divergence(carrier, state.u, g);
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double u = state.u[k], v = state.v[k], w = state.w[k];
    m.lap_u_sq += lap_u[k] * lap_u[k] * area;
    m.h_integral += reaction_h(u, v, w, p) * area;
    double force = reaction_g(u, v, w, p);
    if (taxis) force -= p.xi * (*taxis)[k];
    m.force_v_l65 += std::pow(std::abs(force), 1.2) * area;
  }
  m.gn_ratio_u = gn_ratio(state.u);

  auto trap = [&](double before, double now) { return 0.5 * m.dt * (before + now); };
  if (prev) {
    m.rhs_v_l65 = trap(prev->force_v_l65, m.force_v_l65);
    m.cum_lap_u_sq = prev->cum_lap_u_sq + trap(prev->lap_u_sq, m.lap_u_sq);
    m.cum_grad_v_sq = prev->cum_grad_v_sq + trap(prev->grad_v_sq, m.grad_v_sq);
    m.cum_grad_uv_sq = prev->cum_grad_uv_sq + trap(prev->grad_uv_sq, m.grad_uv_sq);
    m.cum_logw_grad_sq = prev->cum_logw_grad_sq + trap(prev->logw_grad_sq, m.logw_grad_sq);
    m.cum_rhs_v_l65 = prev->cum_rhs_v_l65 + m.rhs_v_l65;
    m.cum_h = prev->cum_h + trap(prev->h_integral, m.h_integral);
  }

  const BoundSet& b = ctx.bounds;
  m.bound_margins.emplace_back("l1", b.l1 - m.comb_mass);
  m.bound_margins.emplace_back("u_sup", b.u_bar - m.sup_u);
  if (b.v_bar) m.bound_margins.emplace_back("v_sup", *b.v_bar - m.sup_v);
  if (b.w_bar) m.bound_margins.emplace_back("w_sup", *b.w_bar - m.sup_w);
  m.bound_margins.emplace_back("mass_w", ctx.mass_w0 + m.cum_h - m.mass_w);
  return m;
}

// ---------------------------------------------------------------------------

bool AuditReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const AuditEntry& e) { return e.passed; });
}

void AuditReport::append(const AuditReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

std::string AuditReport::to_text() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %24s %24s  %s\n", "name", "worst_margin", "time_of_worst", "status");
  os << line;
  for (const auto& e : entries) {
    std::snprintf(line, sizeof line, "%-28s %24.17g %24.17g  %s", e.name.c_str(), e.worst_margin,
                  e.time_of_worst, e.passed ? "PASS" : "FAIL");
    os << line;
    if (!e.note.empty()) os << "  # " << e.note;
    os << '\n';
  }
  os << "overall: " << (passed() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

namespace {

const StateTriple& initial_of(const Trajectory& traj) {
  if (traj.snapshots.empty() || traj.monitors.empty())
    throw std::invalid_argument("audit: trajectory has no snapshots or monitors");
  return traj.snapshots.front();
}

// Tracks the smallest margin over a series of (t, margin) samples.
struct WorstTracker {
  double margin = std::numeric_limits<double>::infinity();
  double time = 0.0;
  void observe(double t, double m) {
    if (m < margin) {
      margin = m;
      time = t;
    }
  }
};

AuditEntry sup_entry(const std::string& name, const Trajectory& traj, double bound,
                     double MonitorRecord::*field) {
  WorstTracker w;
  const double allowed = bound * (1.0 + kBoundRelTol);
  for (const auto& m : traj.monitors) w.observe(m.t, allowed - m.*field);
  std::ostringstream note;
  note.precision(17);
  note << "bound " << bound;
  return {name, w.margin, w.time, w.margin >= 0.0, note.str()};
}

}  // namespace

AuditReport audit_l1_bound(const Trajectory& traj, const Params& p) {
  const StateTriple& init = initial_of(traj);
  const double bound = l1_bound(traj.monitors.front().comb_mass, p, init.grid().measure());
  AuditReport r;
  r.entries.push_back(sup_entry("l1_bound", traj, bound, &MonitorRecord::comb_mass));
  return r;
}

AuditReport audit_sup_bounds(const Trajectory& traj, const Params& p, Regime regime,
                             std::optional<double> eps) {
  const BoundSet b = compute_bounds(initial_of(traj), p, regime, eps);
  AuditReport r;
  r.entries.push_back(sup_entry("sup_u", traj, b.u_bar, &MonitorRecord::sup_u));
  if (b.v_bar) r.entries.push_back(sup_entry("sup_v", traj, *b.v_bar, &MonitorRecord::sup_v));
  if (b.w_bar) r.entries.push_back(sup_entry("sup_w", traj, *b.w_bar, &MonitorRecord::sup_w));
  return r;
}

std::vector<std::pair<double, double>> mass_residual_series(const Trajectory& traj) {
  initial_of(traj);
  const double w0 = traj.monitors.front().mass_w;
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.monitors.size());
  for (const auto& m : traj.monitors) out.emplace_back(m.t, w0 + m.cum_h - m.mass_w);
  return out;
}

AuditReport audit_mass_inequality(const Trajectory& traj, const Params&) {
  const auto series = mass_residual_series(traj);
  const double tol = 1e-6 * (1.0 + std::abs(traj.monitors.front().mass_w));
  WorstTracker w;
  double max_abs = 0.0;
  for (const auto& [t, r] : series) {
    w.observe(t, r + tol);
    max_abs = std::max(max_abs, std::abs(r));
  }
  std::ostringstream note;
  note.precision(6);
  note << "max |r| = " << max_abs << ", checked at every step (no exceptional null set)";
  AuditReport rep;
  rep.entries.push_back({"mass_inequality_w", w.margin, w.time, w.margin >= 0.0, note.str()});
  return rep;
}

std::vector<EnergyRow> energy_series(const Trajectory& traj) {
  std::vector<EnergyRow> rows;
  rows.reserve(traj.monitors.size());
  for (const auto& m : traj.monitors)
    rows.push_back({m.t, m.grad_u_sq, m.cum_grad_v_sq, m.cum_grad_uv_sq, m.cum_logw_grad_sq,
                    m.cum_lap_u_sq, m.cum_rhs_v_l65});
  return rows;
}

std::string energy_table(const std::vector<EnergyRow>& rows) {
  std::ostringstream os;
  os << "t,grad_u_sq,cum_grad_v_sq,cum_grad_uv_sq,cum_logw_grad_sq,cum_lap_u_sq,cum_rhs_v_l65\n";
  char line[512];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.grad_u_sq,
                  r.cum_grad_v_sq, r.cum_grad_uv_sq, r.cum_logw_grad_sq, r.cum_lap_u_sq, r.cum_rhs_v_l65);
    os << line;
  }
  return os.str();
}

AuditReport audit_eps_uniformity(const std::vector<EpsLadderEntry>& ladder, double factor) {
  if (ladder.size() < 2) throw std::invalid_argument("audit_eps_uniformity: need at least two ladder members");
  AuditReport rep;
  const std::pair<const char*, double EnergyRow::*> series[] = {
      {"eps_uniform_cum_grad_v_sq", &EnergyRow::cum_grad_v_sq},
      {"eps_uniform_cum_grad_uv_sq", &EnergyRow::cum_grad_uv_sq},
      {"eps_uniform_cum_logw_grad_sq", &EnergyRow::cum_logw_grad_sq},
      {"eps_uniform_cum_lap_u_sq", &EnergyRow::cum_lap_u_sq},
  };
  for (const auto& [name, field] : series) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, eps_hi = 0.0;
    for (const auto& e : ladder) {
      const double v = e.final_row.*field;
      lo = std::min(lo, v);
      if (v >= hi) {
        hi = v;
        eps_hi = e.eps;
      }
    }
    double ratio = 1.0;
    if (hi > 0.0) ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    std::ostringstream note;
    note.precision(6);
    note << "max/min = " << ratio << " (time column holds eps of the max)";
    rep.entries.push_back({name, factor - ratio, eps_hi, ratio <= factor, note.str()});
  }
  for (const auto& e : ladder) {
    std::ostringstream name;
    name << "sup_v_eps_" << e.eps;
    const double margin = e.v_bound * (1.0 + kBoundRelTol) - e.sup_v;
    rep.entries.push_back({name.str(), margin, e.eps, margin >= 0.0, ""});
  }
  return rep;
}

std::string eps_uniformity_table(const std::vector<EpsLadderEntry>& ladder) {
  std::ostringstream os;
  os << "eps,cum_grad_v_sq,cum_grad_uv_sq,cum_logw_grad_sq,cum_lap_u_sq,cum_rhs_v_l65,grad_u_sq_final,sup_v,v_bound\n";
  char line[512];
  for (const auto& e : ladder) {
    const EnergyRow& r = e.final_row;
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.eps,
                  r.cum_grad_v_sq, r.cum_grad_uv_sq, r.cum_logw_grad_sq, r.cum_lap_u_sq, r.cum_rhs_v_l65,
                  r.grad_u_sq, e.sup_v, e.v_bound);
    os << line;
  }
  return os.str();
}

std::optional<double> max_gn_ratio(const Trajectory& traj) {
  std::optional<double> best;
  for (const auto& m : traj.monitors)
    if (m.gn_ratio_u && (!best || *m.gn_ratio_u > *best)) best = m.gn_ratio_u;
  return best;
}

}  // namespace alarm_taxis
