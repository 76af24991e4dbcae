#include "alarm_taxis/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace alarm_taxis {

void SolverConfig::validate(const Params& p) const {
  p.validate();
  if (!std::isfinite(t_end) || t_end < 0.0) throw std::invalid_argument("solver: t_end must be >= 0");
  if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
    throw std::invalid_argument("solver: cfl_safety must lie in (0, 1]");
  if (!(snapshot_interval > 0.0) || !std::isfinite(snapshot_interval))
    throw std::invalid_argument("solver: snapshot_interval must be > 0");
  if (dt_max && !(*dt_max > 0.0)) throw std::invalid_argument("solver: dt_max must be > 0");
  switch (regime) {
    case Regime::classical:
      if (p.xi != 0.0) throw std::invalid_argument("solver: classical regime requires xi = 0");
      if (eps) throw std::invalid_argument("solver: eps is only meaningful in the regularized regime");
      break;
    case Regime::full:
      if (eps) throw std::invalid_argument("solver: eps is only meaningful in the regularized regime");
      break;
    case Regime::regularized:
      if (!eps) throw std::invalid_argument("solver: regularized regime requires eps");
      CutoffSpec::make(*eps);
      break;
  }
}

std::optional<CutoffSpec> SolverConfig::cutoff() const {
  if (regime == Regime::regularized && eps) return CutoffSpec::make(*eps);
  return std::nullopt;
}

namespace {

constexpr double kTiny = 1e-30;

Field apply_cutoff(const Field& z, const std::optional<CutoffSpec>& cutoff) {
  if (!cutoff) return z;
  Field out(z.grid());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = sigma_eps(z[k], *cutoff);
  return out;
}

bool kinetics_enabled(const SolverConfig& cfg) { return !cfg.mms || cfg.mms->kinetics; }
bool taxis_enabled(const SolverConfig& cfg) { return !cfg.mms || cfg.mms->taxis; }
double eff_xi(const Params& p, const SolverConfig& cfg) { return taxis_enabled(cfg) ? p.xi : 0.0; }
double eff_chi(const Params& p, const SolverConfig& cfg) { return taxis_enabled(cfg) ? p.chi : 0.0; }

// Conservative transport written as inflow - out_rate * z, kinetics as
// prod - (dest_rate * z + dest_source). All entries are >= 0.
struct SpeciesTerms {
  std::vector<double> inflow, out_rate, prod, dest_rate, dest_source;
  explicit SpeciesTerms(std::size_t n)
      : inflow(n, 0.0), out_rate(n, 0.0), prod(n, 0.0), dest_rate(n, 0.0), dest_source(n, 0.0) {}
};

struct Decomposition {
  std::array<SpeciesTerms, 3> species;
  double max_out_rate = 0.0;
};

template <class Visit>
void for_each_face(const GridSpec& g, Visit&& visit) {
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) visit(g.index(i, j), g.index(i + 1, j), ihx2);
  for (std::size_t j = 0; j + 1 < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) visit(g.index(i, j), g.index(i, j + 1), ihy2);
}

void add_diffusion(const Field& z, double d, SpeciesTerms& t) {
  for_each_face(z.grid(), [&](std::size_t a, std::size_t b, double ih2) {
    const double c = d * ih2;
    t.inflow[a] += c * z[b];
    t.inflow[b] += c * z[a];
    t.out_rate[a] += c;
    t.out_rate[b] += c;
  });
}

// Upwind -kappa div(S(z) grad psi); ratio = S(z) / z in [0, 1].
void add_taxis(const Field& z, const Field& potential, double kappa,
               const std::optional<CutoffSpec>& cutoff, SpeciesTerms& t) {
  if (kappa == 0.0) return;
  const std::size_t n = z.size();
  std::vector<double> ratio(n, 1.0), carrier(z.values().begin(), z.values().end());
  if (cutoff) {
    for (std::size_t k = 0; k < n; ++k) {
      const double x = cutoff->eps * z[k] - 1.0;
      if (x > 0.0) {
        ratio[k] = mollifier_step(x);
        carrier[k] = z[k] * ratio[k];
      }
    }
  }
  for_each_face(z.grid(), [&](std::size_t a, std::size_t b, double ih2) {
    const double dpsi = potential[b] - potential[a];
    if (dpsi > 0.0) {
      const double c = kappa * dpsi * ih2;
      t.out_rate[a] += c * ratio[a];
      t.inflow[b] += c * carrier[a];
    } else if (dpsi < 0.0) {
      const double c = -kappa * dpsi * ih2;
      t.out_rate[b] += c * ratio[b];
      t.inflow[a] += c * carrier[b];
    }
  });
}

Decomposition decompose(const StateTriple& s, double time, const Params& p, const SolverConfig& cfg,
                        const std::optional<CutoffSpec>& cutoff) {
  const GridSpec& g = s.grid();
  const std::size_t n = g.size();
  Decomposition dec{{SpeciesTerms(n), SpeciesTerms(n), SpeciesTerms(n)}, 0.0};
  auto& [tu, tv, tw] = dec.species;

  add_diffusion(s.u, p.d1, tu);
  add_diffusion(s.v, p.d2, tv);
  add_diffusion(s.w, p.d3, tw);
  add_taxis(s.v, s.u, eff_xi(p, cfg), cutoff, tv);
  if (eff_chi(p, cfg) != 0.0) add_taxis(s.w, hadamard(s.u, s.v), eff_chi(p, cfg), cutoff, tw);

  if (kinetics_enabled(cfg)) {
    // Term-wise Patankar split: linear growth and gains produce, everything
    // proportional to the species itself destroys.
    for (std::size_t k = 0; k < n; ++k) {
      const double u = s.u[k], v = s.v[k], w = s.w[k];
      tu.prod[k] = p.lambda1 * u;
      tu.dest_rate[k] = p.mu1 * u + p.a1 * v + p.a2 * w;
      tv.prod[k] = v * (p.lambda2 + p.b1 * u);
      tv.dest_rate[k] = p.mu2 * v + p.a3 * w;
      tw.prod[k] = w * (p.lambda3 + p.b2 * u + p.b3 * v);
      tw.dest_rate[k] = p.mu3 * w;
    }
  }

  if (cfg.mms && cfg.mms->exact) {
    const ManufacturedSolution& ex = *cfg.mms->exact;
    for (std::size_t j = 0; j < g.ny(); ++j) {
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const std::size_t k = g.index(i, j);
        const auto src = ex.source(g.x_center(i), g.y_center(j), time, p, kinetics_enabled(cfg),
                                   taxis_enabled(cfg));
        for (std::size_t sp = 0; sp < 3; ++sp) {
          if (src[sp] >= 0.0)
            dec.species[sp].prod[k] += src[sp];
          else
            dec.species[sp].dest_source[k] += -src[sp];
        }
      }
    }
  }

  for (const auto& t : dec.species)
    for (double r : t.out_rate) dec.max_out_rate = std::max(dec.max_out_rate, r);
  return dec;
}

inline double per_capita_destruction(const SpeciesTerms& t, std::size_t k, double z) {
  double rate = t.dest_rate[k];
  if (t.dest_source[k] > 0.0)
    rate += z > 0.0 ? t.dest_source[k] / z : std::numeric_limits<double>::infinity();
  return rate;
}

[[noreturn]] void abort_on_cell(const char* what, const char* species, std::size_t k,
                                const GridSpec& g, double value, double t) {
  std::ostringstream os;
  os << what << ": species " << species << " value " << value << " in cell (i=" << k % g.nx()
     << ", j=" << k / g.nx() << ") at t=" << t;
  throw SolverAbort(os.str());
}

}  // namespace

StateRates rhs(const StateTriple& state, const Params& p, const SolverConfig& cfg) {
  state.validate();
  const GridSpec& g = state.grid();
  const auto cutoff = cfg.cutoff();

  StateRates r{p.d1 * laplacian(state.u), p.d2 * laplacian(state.v), p.d3 * laplacian(state.w)};
  const double xi = eff_xi(p, cfg), chi = eff_chi(p, cfg);
  if (xi != 0.0) r.dv -= xi * taxis_divergence(apply_cutoff(state.v, cutoff), state.u, g);
  if (chi != 0.0) r.dw -= chi * taxis_divergence(apply_cutoff(state.w, cutoff), hadamard(state.u, state.v), g);

  if (kinetics_enabled(cfg)) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double u = state.u[k], v = state.v[k], w = state.w[k];
      r.du[k] += reaction_f(u, v, w, p);
      r.dv[k] += reaction_g(u, v, w, p);
      r.dw[k] += reaction_h(u, v, w, p);
    }
  }
  if (cfg.mms && cfg.mms->exact) {
    for (std::size_t j = 0; j < g.ny(); ++j) {
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto s = cfg.mms->exact->source(g.x_center(i), g.y_center(j), state.t, p,
                                              kinetics_enabled(cfg), taxis_enabled(cfg));
        r.du.at(i, j) += s[0];
        r.dv.at(i, j) += s[1];
        r.dw.at(i, j) += s[2];
      }
    }
  }

  const std::pair<const char*, const Field*> outs[] = {{"du", &r.du}, {"dv", &r.dv}, {"dw", &r.dw}};
  for (const auto& [name, f] : outs) {
    for (std::size_t k = 0; k < f->size(); ++k)
      if (!std::isfinite((*f)[k])) abort_on_cell("rhs produced a non-finite value", name, k, g, (*f)[k], state.t);
  }
  return r;
}

DtCandidates dt_candidates(const StateTriple& state, const Params& p, const SolverConfig& cfg) {
  const GridSpec& g = state.grid();
  const double h = g.h_min();
  const double spb = cfg.cutoff() ? cfg.cutoff()->sigma_prime_bound : 1.0;

  DtCandidates c;
  c.diffusion = h * h / (4.0 * std::max({p.d1, p.d2, p.d3}));

  // Drift speed of a cell: sum over its outflow faces of kappa |d psi / dn|,
  // scaled to the reference width h and by the carrier slope bound.
  // v and w drift independently, so the speeds are kept per species.
  auto max_speed = [&](const Field& psi, double kappa) {
    if (kappa == 0.0) return 0.0;
    std::vector<double> speed(g.size(), 0.0);
    for_each_face(g, [&](std::size_t a, std::size_t b, double ih2) {
      const double dpsi = psi[b] - psi[a];
      const double s = kappa * std::abs(dpsi) * ih2 * h * spb;
      if (dpsi > 0.0) speed[a] += s;
      else if (dpsi < 0.0) speed[b] += s;
    });
    return *std::max_element(speed.begin(), speed.end());
  };
  const double speed = std::max(max_speed(state.u, eff_xi(p, cfg)),
                                max_speed(hadamard(state.u, state.v), eff_chi(p, cfg)));
  c.drift = h / (speed + kTiny);

  const double lip = kinetics_enabled(cfg)
                         ? kinetics_lipschitz(state.u.max(), state.v.max(), state.w.max(), p)
                         : 0.0;
  c.kinetic = 1.0 / (lip + kTiny);
  return c;
}

double stable_dt(const StateTriple& state, const Params& p, const SolverConfig& cfg) {
  const DtCandidates c = dt_candidates(state, p, cfg);
  const double dt = cfg.cfl_safety * std::min({c.diffusion, c.drift, c.kinetic});
  if (!(dt >= 1e-12 * cfg.t_end)) {
    std::ostringstream os;
    os << "time step underflow (dt=" << dt << " at t=" << state.t
       << "); possible finite-time blow-up";
    throw SolverAbort(os.str());
  }
  return dt;
}

double max_transport_outflow(const StateTriple& state, const Params& p, const SolverConfig& cfg) {
  return decompose(state, state.t, p, cfg, cfg.cutoff()).max_out_rate;
}

/*
 * Two-stage modified-Patankar Heun step. With T = inflow - out_rate z
 * (transport), P production and D destruction of a species z:
 *
 *   z1 = (z (1 - dt out) + dt (in + P)) / (1 + dt D / z)
 *   z' = (z + dt/2 (T + T1) + dt/2 (P + P1)) / (1 + dt/2 (D + D1) / z1)
 *
 * where index 1 denotes evaluation at the first stage (time t + dt). The
 * step is second order, conserves transported mass to round-off, and keeps
 * every cell nonnegative whenever dt * out_rate <= 1 at both stages.
 */
std::optional<StateTriple> try_step(const StateTriple& state, const Params& p,
                                    const SolverConfig& cfg, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("try_step: dt must be > 0");
  const auto cutoff = cfg.cutoff();
  const GridSpec& g = state.grid();
  const std::size_t n = g.size();

  const Decomposition d0 = decompose(state, state.t, p, cfg, cutoff);
  if (dt * d0.max_out_rate > 1.0) return std::nullopt;

  const Field* z0[] = {&state.u, &state.v, &state.w};
  StateTriple s1{Field(g), Field(g), Field(g), state.t + dt};
  Field* z1[] = {&s1.u, &s1.v, &s1.w};
  for (std::size_t sp = 0; sp < 3; ++sp) {
    const SpeciesTerms& t = d0.species[sp];
    for (std::size_t k = 0; k < n; ++k) {
      const double z = (*z0[sp])[k];
      const double num = z * (1.0 - dt * t.out_rate[k]) + dt * (t.inflow[k] + t.prod[k]);
      (*z1[sp])[k] = num / (1.0 + dt * per_capita_destruction(t, k, z));
    }
  }

  const Decomposition d1 = decompose(s1, s1.t, p, cfg, cutoff);
  if (dt * d1.max_out_rate > 1.0) return std::nullopt;

  static constexpr const char* names[] = {"u", "v", "w"};
  StateTriple out{Field(g), Field(g), Field(g), state.t + dt};
  Field* z2[] = {&out.u, &out.v, &out.w};
  const double half = 0.5 * dt;
  for (std::size_t sp = 0; sp < 3; ++sp) {
    const SpeciesTerms& a = d0.species[sp];
    const SpeciesTerms& b = d1.species[sp];
    for (std::size_t k = 0; k < n; ++k) {
      const double z = (*z0[sp])[k];
      const double y = (*z1[sp])[k];
      const double num = z * (1.0 - half * a.out_rate[k]) +
                         half * (a.inflow[k] + a.prod[k] + b.inflow[k] + b.prod[k]) -
                         half * b.out_rate[k] * y;
      const double destroyed = a.dest_rate[k] * z + a.dest_source[k] + b.dest_rate[k] * y + b.dest_source[k];
      double next;
      if (y > 0.0)
        next = num / (1.0 + half * destroyed / y);
      else
        next = destroyed > 0.0 ? 0.0 : num;
      if (!std::isfinite(next)) abort_on_cell("non-finite update", names[sp], k, g, next, out.t);
      if (next < 0.0) abort_on_cell("positivity violated by the scheme", names[sp], k, g, next, out.t);
      (*z2[sp])[k] = next;
    }
  }
  return out;
}

StateTriple step(const StateTriple& state, const Params& p, const SolverConfig& cfg, double dt) {
  auto next = try_step(state, p, cfg, dt);
  if (!next) {
    std::ostringstream os;
    os << "step rejected: dt=" << dt << " exceeds the transport positivity limit at t=" << state.t;
    throw SolverAbort(os.str());
  }
  return std::move(*next);
}

namespace {

std::vector<double> snapshot_times(double t_end, double interval) {
  std::vector<double> times{0.0};
  if (t_end <= 0.0) return times;
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * interval;
    if (t >= t_end * (1.0 - 1e-12)) break;
    times.push_back(t);
  }
  times.push_back(t_end);
  return times;
}

std::vector<MonitorRecord> tail_of(const std::vector<MonitorRecord>& m, std::size_t n = 16) {
  return {m.end() - static_cast<std::ptrdiff_t>(std::min(n, m.size())), m.end()};
}

}  // namespace

Trajectory run(const StateTriple& initial, const Params& p, const SolverConfig& cfg,
               const StepObserver& observer) {
  cfg.validate(p);
  initial.validate();
  if (initial.t != 0.0) throw std::invalid_argument("run: initial state must start at t = 0");

  const MonitorContext ctx = make_monitor_context(initial, p, cfg.regime, cfg.eps);
  const std::vector<double> targets = snapshot_times(cfg.t_end, cfg.snapshot_interval);

  Trajectory traj;
  traj.snapshots.push_back(initial);
  traj.monitors.push_back(compute_monitor(initial, ctx, nullptr));
  if (observer) observer(initial);

  StateTriple state = initial;
  std::size_t next_target = 1;
  while (next_target < targets.size()) {
    const double target = targets[next_target];
    double dt;
    try {
      dt = stable_dt(state, p, cfg);
    } catch (const SolverAbort& e) {
      throw SolverAbort(e.what(), tail_of(traj.monitors));
    }
    if (cfg.dt_max) dt = std::min(dt, *cfg.dt_max);

    const double remaining = target - state.t;
    bool lands = false;
    if (dt >= remaining * (1.0 - 1e-9)) {
      dt = remaining;
      lands = true;
    }

    std::optional<StateTriple> next;
    try {
      for (int attempt = 0; attempt < 64; ++attempt) {
        next = try_step(state, p, cfg, dt);
        if (next) break;
        ++traj.rejected_steps;
        dt *= 0.5;
        lands = false;
        if (dt < 1e-12 * cfg.t_end) break;
      }
    } catch (const SolverAbort& e) {
      throw SolverAbort(e.what(), tail_of(traj.monitors));
    }
    if (!next) {
      std::ostringstream os;
      os << "time step underflow after rejections at t=" << state.t << "; possible blow-up";
      throw SolverAbort(os.str(), tail_of(traj.monitors));
    }
    if (lands) next->t = target;

    state = std::move(*next);
    traj.monitors.push_back(compute_monitor(state, ctx, &traj.monitors.back()));
    // The realised step (landings and rounding included), as recorded in the monitor.
    traj.dt_history.push_back(traj.monitors.back().dt);
    if (observer) observer(state);
    if (lands) {
      traj.snapshots.push_back(state);
      ++next_target;
    }
  }
  return traj;
}

StateTriple presmooth(const StateTriple& state, std::size_t k) {
  StateTriple out = state;
  const double h = state.grid().h_min();
  const double tau = h * h / 8.0;
  for (std::size_t it = 0; it < k; ++it) {
    out.u += tau * laplacian(out.u);
    out.v += tau * laplacian(out.v);
    out.w += tau * laplacian(out.w);
  }
  return out;
}

}  // namespace alarm_taxis
