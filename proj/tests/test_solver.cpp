#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "alarm_taxis/kinetics_ode.hpp"
#include "alarm_taxis/solver.hpp"

using namespace alarm_taxis;

namespace {

Field random_field(const GridSpec& g, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Field f(g);
  for (auto& x : f.values()) x = d(rng);
  return f;
}

StateTriple constant_state(const GridSpec& g, double u, double v, double w) {
  return {Field(g, u), Field(g, v), Field(g, w), 0.0};
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// Hand-rolled face loop: d Lap z - kappa div(S(c) grad psi) with upwind S(c).
Field reference_transport(const Field& z, double d, const Field& carrier, const Field& psi, double kappa,
                          const std::optional<CutoffSpec>& cutoff) {
  const GridSpec& g = z.grid();
  Field out(g, 0.0);
  auto s = [&](double x) { return cutoff ? sigma_eps(x, *cutoff) : x; };
  auto face = [&](std::size_t a, std::size_t b, double h) {
    const double diff = d * (z[b] - z[a]) / h;
    const double dpsi = psi[b] - psi[a];
    const double up = dpsi > 0.0 ? s(carrier[a]) : dpsi < 0.0 ? s(carrier[b]) : 0.0;
    const double flux = diff - kappa * up * dpsi / h;  // flux from a into b direction
    out[a] += flux / h;
    out[b] -= flux / h;
  };
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) face(g.index(i, j), g.index(i + 1, j), g.hx());
  for (std::size_t j = 0; j + 1 < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) face(g.index(i, j), g.index(i, j + 1), g.hy());
  return out;
}

SolverConfig config(Regime regime, double t_end, std::optional<double> eps = std::nullopt) {
  SolverConfig c;
  c.regime = regime;
  c.t_end = t_end;
  c.eps = eps;
  c.snapshot_interval = t_end > 0.0 ? t_end / 4.0 : 1.0;
  return c;
}

}  // namespace

TEST_CASE("rhs of a spatially constant state is pure kinetics") {
  const GridSpec g(5, 4, 1.0, 2.0);
  Params p;
  p.xi = 0.8;
  p.lambda2 = 1.7;
  const StateTriple s = constant_state(g, 0.4, 1.3, 2.2);
  const StateRates r = rhs(s, p, config(Regime::full, 1.0));
  CHECK(r.du == Field(g, reaction_f(0.4, 1.3, 2.2, p)));
  CHECK(r.dv == Field(g, reaction_g(0.4, 1.3, 2.2, p)));
  CHECK(r.dw == Field(g, reaction_h(0.4, 1.3, 2.2, p)));

  const StateRates z = rhs(constant_state(g, 0.0, 0.0, 0.0), p, config(Regime::full, 1.0));
  CHECK(z.du == Field(g, 0.0));
  CHECK(z.dv == Field(g, 0.0));
  CHECK(z.dw == Field(g, 0.0));
}

TEST_CASE("rhs matches an independent face-flux evaluation") {
  std::mt19937_64 rng(21);
  Params p;
  p.d1 = 0.7, p.d2 = 1.3, p.d3 = 0.4, p.xi = 0.9, p.chi = 1.6, p.a3 = 0.5, p.b2 = 2.0;
  for (const GridSpec& g : {GridSpec(7, 1, 2.0, 1.0), GridSpec(6, 5, 1.5, 1.0)}) {
    for (const auto& [regime, eps] : {std::pair{Regime::full, std::optional<double>{}},
                                      std::pair{Regime::regularized, std::optional<double>{0.4}}}) {
      const StateTriple s{random_field(g, rng, 0.0, 2.0), random_field(g, rng, 0.0, 5.0),
                          random_field(g, rng, 0.0, 5.0), 0.0};
      const SolverConfig cfg = config(regime, 1.0, eps);
      const auto cutoff = cfg.cutoff();
      const StateRates r = rhs(s, p, cfg);
      const Field uv = hadamard(s.u, s.v);
      Field du = reference_transport(s.u, p.d1, s.u, s.u, 0.0, cutoff);
      Field dv = reference_transport(s.v, p.d2, s.v, s.u, p.xi, cutoff);
      Field dw = reference_transport(s.w, p.d3, s.w, uv, p.chi, cutoff);
      for (std::size_t k = 0; k < g.size(); ++k) {
        du[k] += reaction_f(s.u[k], s.v[k], s.w[k], p);
        dv[k] += reaction_g(s.u[k], s.v[k], s.w[k], p);
        dw[k] += reaction_h(s.u[k], s.v[k], s.w[k], p);
      }
      CHECK(max_abs_diff(r.du, du) < 1e-11);
      CHECK(max_abs_diff(r.dv, dv) < 1e-11);
      CHECK(max_abs_diff(r.dw, dw) < 1e-11);
    }
  }
}

TEST_CASE("stable_dt example: diffusion limited") {
  // h = 0.1, unit diffusivities, zero state: min(h^2 / 4, inf, 1 / lambda) = 0.0025.
  const GridSpec g(10, 10, 1.0, 1.0);
  SolverConfig cfg = config(Regime::classical, 1.0);
  cfg.cfl_safety = 1.0;
  const StateTriple s = constant_state(g, 0.0, 0.0, 0.0);
  const DtCandidates c = dt_candidates(s, Params{}, cfg);
  CHECK(c.diffusion == doctest::Approx(0.0025));
  CHECK(c.drift > 1e20);
  CHECK(c.kinetic == doctest::Approx(1.0));
  CHECK(stable_dt(s, Params{}, cfg) == doctest::Approx(0.0025));
}

TEST_CASE("stable_dt aborts on step underflow") {
  const GridSpec g(10, 10, 1.0, 1.0);
  Params p;
  p.d1 = 1e20;
  CHECK_THROWS_AS(stable_dt(constant_state(g, 1.0, 1.0, 1.0), p, config(Regime::classical, 1.0)), SolverAbort);
}

TEST_CASE("transport conserves mass to round-off") {
  std::mt19937_64 rng(22);
  const GridSpec g(16, 12, 2.0, 1.5);
  Params p;
  p.xi = 1.5;
  p.chi = 0.7;
  StateTriple s{random_field(g, rng, 0.0, 2.0), random_field(g, rng, 0.0, 2.0), random_field(g, rng, 0.0, 2.0), 0.0};
  for (bool taxis : {false, true}) {
    SolverConfig cfg = config(Regime::full, 0.5);
    cfg.mms = MmsDescriptor{false, taxis, std::nullopt};
    const Trajectory t = run(s, p, cfg);
    const StateTriple& e = t.snapshots.back();
    CHECK(std::abs(integrate(e.u) - integrate(s.u)) <= 1e-12 * integrate(s.u));
    CHECK(std::abs(integrate(e.v) - integrate(s.v)) <= 1e-12 * integrate(s.v));
    CHECK(std::abs(integrate(e.w) - integrate(s.w)) <= 1e-12 * integrate(s.w));
    CHECK(t.dt_history.size() > 10);
  }
}

TEST_CASE("t_end = 0 returns the initial state only") {
  const GridSpec g(4, 4, 1.0, 1.0);
  const StateTriple s = constant_state(g, 0.5, 0.5, 0.5);
  const Trajectory t = run(s, Params{}, config(Regime::classical, 0.0));
  REQUIRE(t.snapshots.size() == 1);
  CHECK(t.snapshots[0] == s);
  CHECK(t.monitors.size() == 1);
  CHECK(t.dt_history.empty());
}

TEST_CASE("snapshots land on the requested times and every step is observed") {
  std::mt19937_64 rng(23);
  const GridSpec g(10, 8, 1.0, 1.0);
  const StateTriple s{random_field(g, rng, 0.1, 1.0), random_field(g, rng, 0.1, 1.0), random_field(g, rng, 0.1, 1.0), 0.0};
  SolverConfig cfg = config(Regime::classical, 0.7);
  cfg.snapshot_interval = 0.2;
  std::size_t seen = 0;
  const Trajectory t = run(s, Params{}, cfg, [&](const StateTriple&) { ++seen; });
  REQUIRE(t.snapshots.size() == 5);
  const double expect[] = {0.0, 0.2, 0.4, 0.6, 0.7};
  for (std::size_t k = 0; k < 5; ++k) CHECK(t.snapshots[k].t == doctest::Approx(expect[k]).epsilon(1e-14));
  CHECK(t.snapshots.back().t == 0.7);
  CHECK(seen == t.dt_history.size() + 1);
  CHECK(t.monitors.size() == t.dt_history.size() + 1);
}

TEST_CASE("reruns are bitwise identical") {
  std::mt19937_64 rng(24);
  const GridSpec g(12, 12, 2.0, 2.0);
  Params p;
  p.xi = 2.0;
  const StateTriple s{random_field(g, rng, 0.0, 3.0), random_field(g, rng, 0.0, 3.0), random_field(g, rng, 0.0, 3.0), 0.0};
  const SolverConfig cfg = config(Regime::regularized, 0.5, 0.3);
  CHECK(run(s, p, cfg) == run(s, p, cfg));
}

TEST_CASE("rough data with strong taxis stays nonnegative at every step") {
  std::mt19937_64 rng(25);
  const GridSpec g(20, 20, 2.0, 2.0);
  Params p;
  p.xi = 8.0;
  p.chi = 8.0;
  const StateTriple s{random_field(g, rng, 0.0, 4.0), random_field(g, rng, 0.0, 4.0), random_field(g, rng, 0.0, 4.0), 0.0};
  for (const auto& [regime, eps] : {std::pair{Regime::full, std::optional<double>{}},
                                    std::pair{Regime::regularized, std::optional<double>{0.2}}}) {
    bool ok = true;
    run(s, p, config(regime, 0.3, eps), [&](const StateTriple& st) {
      for (const Field* f : {&st.u, &st.v, &st.w})
        for (double x : f->values()) ok = ok && x >= 0.0 && std::isfinite(x);
    });
    CHECK(ok);
  }
}

TEST_CASE("try_step rejects steps beyond the transport limit") {
  std::mt19937_64 rng(26);
  const GridSpec g(10, 10, 1.0, 1.0);
  Params p;
  p.xi = 5.0;
  const StateTriple s{random_field(g, rng, 0.0, 3.0), random_field(g, rng, 0.0, 3.0), random_field(g, rng, 0.0, 3.0), 0.0};
  const SolverConfig cfg = config(Regime::full, 1.0);
  const double limit = 1.0 / max_transport_outflow(s, p, cfg);
  CHECK_FALSE(try_step(s, p, cfg, 3.0 * limit).has_value());
  CHECK_THROWS_AS(step(s, p, cfg, 3.0 * limit), SolverAbort);
  CHECK(try_step(s, p, cfg, stable_dt(s, p, cfg)).has_value());
}

TEST_CASE("spatially constant data follow the kinetic ODE towards its equilibrium") {
  const GridSpec g(3, 3, 1.0, 1.0);
  const Params p;
  SolverConfig cfg = config(Regime::classical, 30.0);
  cfg.dt_max = 2e-3;
  cfg.snapshot_interval = 10.0;
  const Trajectory t = run(constant_state(g, 0.5, 0.3, 0.2), p, cfg);
  const auto ode = integrate_kinetics({0.5, 0.3, 0.2}, p, {10.0, 20.0, 30.0});
  for (std::size_t k = 1; k < t.snapshots.size(); ++k) {
    const StateTriple& s = t.snapshots[k];
    CHECK(s.u.max() == doctest::Approx(ode[k - 1][0]).epsilon(1e-5));
    CHECK(s.v.max() == doctest::Approx(ode[k - 1][1]).epsilon(1e-5));
    CHECK(s.w.max() == doctest::Approx(ode[k - 1][2]).epsilon(1e-5));
    CHECK(s.u.max() - s.u.min() <= 1e-14 * s.u.max());
  }
  // (0, 0, 1) is neutral in u (lambda1 = a2), so the approach is slow but monotone.
  double prev = 1e300;
  for (const auto& s : t.snapshots) {
    const double dist = std::abs(s.u[0]) + std::abs(s.v[0]) + std::abs(s.w[0] - 1.0);
    CHECK(dist < prev);
    prev = dist;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("time integration is second order on the kinetics") {
  const GridSpec g(2, 1, 1.0, 1.0);
  Params p;
  p.lambda1 = 2.0;
  const KineticState y0{0.3, 0.6, 0.9};
  const auto exact = integrate_kinetics(y0, p, {2.0})[0];
  double err[3];
  const double dts[] = {0.02, 0.01, 0.005};
  for (int l = 0; l < 3; ++l) {
    SolverConfig cfg = config(Regime::classical, 2.0);
    cfg.dt_max = dts[l];
    cfg.snapshot_interval = 2.0;
    const StateTriple e = run(constant_state(g, y0[0], y0[1], y0[2]), p, cfg).snapshots.back();
    err[l] = std::max({std::abs(e.u[0] - exact[0]), std::abs(e.v[0] - exact[1]), std::abs(e.w[0] - exact[2])});
  }
  CHECK(std::log2(err[0] / err[1]) > 1.8);
  CHECK(std::log2(err[1] / err[2]) > 1.8);
}

TEST_CASE("solver configuration checks") {
  const GridSpec g(4, 4, 1.0, 1.0);
  const StateTriple s = constant_state(g, 1.0, 1.0, 1.0);
  Params p;
  p.xi = 1.0;
  CHECK_THROWS_AS(run(s, p, config(Regime::classical, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(run(s, p, config(Regime::regularized, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(run(s, p, config(Regime::regularized, 1.0, 2.0)), std::invalid_argument);
  CHECK_THROWS_AS(run(s, p, config(Regime::full, 1.0, 0.5)), std::invalid_argument);
  SolverConfig bad = config(Regime::full, 1.0);
  bad.cfl_safety = 1.5;
  CHECK_THROWS_AS(run(s, p, bad), std::invalid_argument);
}

TEST_CASE("presmoothing conserves mass and flattens gradients") {
  std::mt19937_64 rng(27);
  const GridSpec g(16, 16, 1.0, 1.0);
  const StateTriple s{random_field(g, rng, 0.0, 1.0), random_field(g, rng, 0.0, 1.0), random_field(g, rng, 0.0, 1.0), 0.0};
  const StateTriple m = presmooth(s, 5);
  CHECK(integrate(m.u) == doctest::Approx(integrate(s.u)).epsilon(1e-13));
  CHECK(grad_sq_integral(m.v) < grad_sq_integral(s.v));
  CHECK(m.w.min() >= 0.0);
  CHECK(presmooth(s, 0) == s);
}

TEST_CASE("manufactured constants are reproduced to round-off") {
  // Constant components: the source is minus the kinetics, so the exact state never moves.
  const ManufacturedSolution ex({ManufacturedComponent{0.7, 0.0, 1, 1, 0.0}, ManufacturedComponent{1.2, 0.0, 1, 1, 0.0},
                                 ManufacturedComponent{0.4, 0.0, 1, 1, 0.0}},
                                1.0, 1.0);
  Params p;
  p.xi = 1.0;
  const ConvergenceReport rep = mms_run(MmsDescriptor{true, true, ex}, p, config(Regime::full, 0.2), {4, 8, 16});
  for (const auto& l : rep.levels) CHECK(l.error_total < 1e-13);
}

TEST_CASE("manufactured diffusion problem converges at second order in 1D") {
  const ManufacturedSolution ex({ManufacturedComponent{1.0, 0.5, 1, 0, 1.0}, ManufacturedComponent{1.0, 0.4, 2, 0, 0.5},
                                 ManufacturedComponent{1.0, 0.3, 1, 0, 0.2}},
                                1.0, 1.0);
  const ConvergenceReport rep =
      mms_run(MmsDescriptor{true, false, ex}, Params{}, config(Regime::classical, 0.1), {16, 32, 64}, true);
  CHECK(rep.monotone);
  CHECK(rep.observed_order > 1.9);
  CHECK_THROWS_AS(mms_run(MmsDescriptor{true, false, ex}, Params{}, config(Regime::classical, 0.1), {16, 32}),
                  std::invalid_argument);
}
