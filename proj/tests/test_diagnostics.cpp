#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "alarm_taxis/diagnostics.hpp"
#include "alarm_taxis/solver.hpp"

using namespace alarm_taxis;

namespace {

StateTriple constant_state(const GridSpec& g, double u, double v, double w) {
  return {Field(g, u), Field(g, v), Field(g, w), 0.0};
}

SolverConfig classical(double t_end) {
  SolverConfig c;
  c.t_end = t_end;
  c.snapshot_interval = t_end / 2.0;
  return c;
}

const AuditEntry* find(const AuditReport& r, const std::string& name) {
  for (const auto& e : r.entries)
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace

TEST_CASE("l1 bound constant") {
  CHECK(l1_bound(0.2, Params{}, 1.0) == 3.0);
  CHECK(l1_bound(5.0, Params{}, 1.0) == 5.0);
  Params p;
  p.lambda2 = 4.0;
  p.mu3 = 0.5;
  // 3 * max lambda * |Omega| / min mu = 3 * 4 * 2 / 0.5.
  CHECK(l1_bound(0.0, p, 2.0) == doctest::Approx(48.0));
}

TEST_CASE("u comparison bound: both branches") {
  const GridSpec g(4, 4, 1.0, 1.0);
  CHECK(compute_bounds(constant_state(g, 0.5, 0.1, 0.1), Params{}, Regime::classical, std::nullopt).u_bar == 1.0);
  CHECK(compute_bounds(constant_state(g, 3.0, 0.1, 0.1), Params{}, Regime::classical, std::nullopt).u_bar == 3.0);
  // Chained v bound: max{|v0|, (lambda2 + b1 u_bar) / mu2} = max{0.1, 2}.
  CHECK(*compute_bounds(constant_state(g, 0.5, 0.1, 0.1), Params{}, Regime::classical, std::nullopt).v_bar == 2.0);
}

TEST_CASE("zero initial data: every audit passes and every series vanishes") {
  const GridSpec g(8, 8, 1.0, 1.0);
  const Trajectory t = run(constant_state(g, 0.0, 0.0, 0.0), Params{}, classical(0.5));
  CHECK(audit_l1_bound(t, Params{}).passed());
  const AuditReport sup = audit_sup_bounds(t, Params{}, Regime::classical);
  CHECK(sup.passed());
  REQUIRE(find(sup, "sup_u") != nullptr);
  CHECK(find(sup, "sup_u")->worst_margin > 0.0);
  CHECK(audit_mass_inequality(t, Params{}).passed());
  for (const auto& [time, r] : mass_residual_series(t)) CHECK(r == 0.0);
  for (const auto& row : energy_series(t)) {
    CHECK(row.grad_u_sq == 0.0);
    CHECK(row.cum_grad_v_sq == 0.0);
    CHECK(row.cum_grad_uv_sq == 0.0);
    CHECK(row.cum_logw_grad_sq == 0.0);
    CHECK(row.cum_lap_u_sq == 0.0);
    CHECK(row.cum_rhs_v_l65 == 0.0);
  }
  CHECK_FALSE(max_gn_ratio(t).has_value());
}

TEST_CASE("w0 = 0 keeps w = 0 and the mass residual at zero") {
  const GridSpec g(10, 10, 1.0, 1.0);
  StateTriple s = constant_state(g, 0.0, 0.0, 0.0);
  s.u = Field::from_function(g, [](double x, double y) { return 1.0 + 0.5 * std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y); });
  s.v = Field(g, 0.7);
  const Trajectory t = run(s, Params{}, classical(0.5));
  for (const auto& snap : t.snapshots) CHECK(snap.w == Field(g, 0.0));
  for (const auto& [time, r] : mass_residual_series(t)) CHECK(r == 0.0);
}

TEST_CASE("spatially constant run: residual equals the trapezoid defect of the mass balance") {
  const GridSpec g(3, 2, 1.5, 1.0);
  const Params p;
  std::vector<StateTriple> states;
  SolverConfig cfg = classical(1.0);
  cfg.dt_max = 0.01;
  const Trajectory t = run(constant_state(g, 0.6, 0.4, 0.3), p, cfg, [&](const StateTriple& s) { states.push_back(s); });
  const auto series = mass_residual_series(t);
  REQUIRE(series.size() == states.size());

  // Independent recomputation from the observed states.
  const double area = g.measure();
  double cum = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    auto h = [&](const StateTriple& s) { return area * reaction_h(s.u[0], s.v[0], s.w[0], p); };
    if (k > 0) cum += 0.5 * (states[k].t - states[k - 1].t) * (h(states[k - 1]) + h(states[k]));
    const double r = area * states[0].w[0] + cum - area * states[k].w[0];
    CHECK(series[k].first == states[k].t);
    CHECK(series[k].second == doctest::Approx(r).epsilon(1e-10).scale(1.0));
  }

  // Halving dt shrinks the residual by about four.
  auto worst = [&](double dt) {
    SolverConfig c = classical(1.0);
    c.dt_max = dt;
    double m = 0.0;
    for (const auto& [time, r] : mass_residual_series(run(constant_state(g, 0.6, 0.4, 0.3), p, c)))
      m = std::max(m, std::abs(r));
    return m;
  };
  const double ratio = worst(0.02) / worst(0.01);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("GN ratio of the cosine profile approaches its closed form") {
  // f = cos(k x), k = pi / lx, unit height: int f'^4 = 3 k^4 lx / 8, int f''^2 = k^4 lx / 2,
  // int f'^2 = k^2 lx / 2, so the ratio is 3 / (2 k^2 lx) = 1.5 lx / pi^2.
  const double lx = 2.0;
  const double exact = 1.5 * lx / (std::numbers::pi * std::numbers::pi);
  double prev = 1e300;
  for (std::size_t n : {32, 64, 128, 256}) {
    const GridSpec g(n, 1, lx, 1.0);
    const Field f = Field::from_function(g, [&](double x, double) { return std::cos(std::numbers::pi * x / lx); });
    const double err = std::abs(*gn_ratio(f) - exact);
    CHECK(err < prev);
    prev = err;
    CHECK(*gn_ratio(2.0 * f) == doctest::Approx(*gn_ratio(f)).epsilon(1e-12));
  }
  CHECK(prev < 0.01 * exact);
  CHECK_FALSE(gn_ratio(Field(GridSpec(8, 8, 1.0, 1.0), 2.0)).has_value());
}

TEST_CASE("spatially constant data: gradient series vanish, masses do not") {
  const GridSpec g(6, 6, 1.0, 1.0);
  const Trajectory t = run(constant_state(g, 0.5, 0.5, 0.5), Params{}, classical(0.5));
  // Cells may drift apart by rounding, so gradients are zero to round-off squared.
  for (const auto& row : energy_series(t)) {
    CHECK(row.grad_u_sq <= 1e-25);
    CHECK(row.cum_grad_v_sq <= 1e-25);
    CHECK(row.cum_grad_uv_sq <= 1e-25);
    CHECK(row.cum_logw_grad_sq <= 1e-25);
  }
  for (const auto& m : t.monitors) CHECK(m.mass_u > 0.1);
}

TEST_CASE("eps uniformity audit") {
  auto entry = [](double eps, double scale) {
    EpsLadderEntry e;
    e.eps = eps;
    e.final_row.cum_grad_v_sq = scale;
    e.final_row.cum_grad_uv_sq = 2.0 * scale;
    e.final_row.cum_logw_grad_sq = 3.0;
    e.final_row.cum_lap_u_sq = 1.0;
    e.sup_v = 1.0;
    e.v_bound = 2.0;
    return e;
  };
  CHECK(audit_eps_uniformity({entry(0.2, 1.0), entry(0.1, 1.5), entry(0.05, 1.9)}).passed());
  const AuditReport bad = audit_eps_uniformity({entry(0.2, 1.0), entry(0.1, 2.5)});
  CHECK_FALSE(bad.passed());
  CHECK(bad.to_text().find("FAIL") != std::string::npos);
  EpsLadderEntry over = entry(0.1, 1.0);
  over.sup_v = 3.0;
  CHECK_FALSE(audit_eps_uniformity({entry(0.2, 1.0), over}).passed());
}

TEST_CASE("sup audit flags a violated bound") {
  const GridSpec g(4, 4, 1.0, 1.0);
  Trajectory t = run(constant_state(g, 0.5, 0.5, 0.5), Params{}, classical(0.2));
  CHECK(audit_sup_bounds(t, Params{}, Regime::classical).passed());
  t.monitors.back().sup_u = 1.5;  // bound is max{0.5, 1} = 1
  const AuditReport r = audit_sup_bounds(t, Params{}, Regime::classical);
  CHECK_FALSE(r.passed());
  CHECK(find(r, "sup_u")->worst_margin < 0.0);
}
