#include "alarm_taxis/mms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "alarm_taxis/solver.hpp"

namespace alarm_taxis {

ManufacturedSolution::ManufacturedSolution(std::array<ManufacturedComponent, 3> components,
                                           double lx, double ly)
    : comps_(components), lx_(lx), ly_(ly) {
  if (!(lx > 0.0) || !(ly > 0.0))
    throw std::invalid_argument("ManufacturedSolution: side lengths must be > 0");
  for (const auto& c : comps_) {
    if (c.kx < 0 || c.ky < 0)
      throw std::invalid_argument("ManufacturedSolution: mode numbers must be >= 0");
    if (c.base - std::abs(c.amplitude) < 0.0)
      throw std::invalid_argument("ManufacturedSolution: component may become negative");
  }
}

ManufacturedSolution::Jet ManufacturedSolution::jet(std::size_t species, double x, double y,
                                                    double t) const {
  const auto& c = comps_.at(species);
  const double kx = c.kx * std::numbers::pi / lx_;
  const double ky = c.ky * std::numbers::pi / ly_;
  const double a = c.amplitude * std::exp(-c.decay * t);
  const double cx = std::cos(kx * x), sx = std::sin(kx * x);
  const double cy = std::cos(ky * y), sy = std::sin(ky * y);
  Jet j;
  j.value = c.base + a * cx * cy;
  j.dt = -c.decay * a * cx * cy;
  j.dx = -a * kx * sx * cy;
  j.dy = -a * cx * ky * sy;
  j.lap = -a * (kx * kx + ky * ky) * cx * cy;
  return j;
}

std::array<double, 3> ManufacturedSolution::values(double x, double y, double t) const {
  return {jet(0, x, y, t).value, jet(1, x, y, t).value, jet(2, x, y, t).value};
}

std::array<double, 3> ManufacturedSolution::source(double x, double y, double t, const Params& p,
                                                   bool kinetics, bool taxis) const {
  const Jet u = jet(0, x, y, t), v = jet(1, x, y, t), w = jet(2, x, y, t);

  // div(v grad u) = grad v . grad u + v lap u
  const double gu_gv = u.dx * v.dx + u.dy * v.dy;
  const double div_v_grad_u = gu_gv + v.value * u.lap;

  // grad(uv) = u grad v + v grad u,  lap(uv) = u lap v + v lap u + 2 grad u . grad v
  const double guv_x = u.value * v.dx + v.value * u.dx;
  const double guv_y = u.value * v.dy + v.value * u.dy;
  const double lap_uv = u.value * v.lap + v.value * u.lap + 2.0 * gu_gv;
  const double div_w_grad_uv = w.dx * guv_x + w.dy * guv_y + w.value * lap_uv;

  const double xi = taxis ? p.xi : 0.0, chi = taxis ? p.chi : 0.0;
  std::array<double, 3> s{u.dt - p.d1 * u.lap, v.dt - p.d2 * v.lap + xi * div_v_grad_u,
                          w.dt - p.d3 * w.lap + chi * div_w_grad_uv};
  if (kinetics) {
    s[0] -= reaction_f(u.value, v.value, w.value, p);
    s[1] -= reaction_g(u.value, v.value, w.value, p);
    s[2] -= reaction_h(u.value, v.value, w.value, p);
  }
  return s;
}

ConvergenceReport mms_run(const MmsDescriptor& descriptor, const Params& p, const SolverConfig& cfg,
                          const std::vector<std::size_t>& ladder, bool one_dimensional) {
  if (!descriptor.exact) throw std::invalid_argument("mms_run: descriptor has no exact solution");
  if (ladder.size() < 3) throw std::invalid_argument("mms_run: ladder needs at least 3 grids");
  if (cfg.regime == Regime::regularized)
    throw std::invalid_argument("mms_run: manufactured sources assume an unregularised regime");
  const ManufacturedSolution& ex = *descriptor.exact;
  if (one_dimensional) {
    for (const auto& c : ex.components())
      if (c.ky != 0) throw std::invalid_argument("mms_run: 1D ladders need ky = 0");
  }

  SolverConfig level_cfg = cfg;
  level_cfg.mms = descriptor;
  level_cfg.snapshot_interval = cfg.t_end;

  ConvergenceReport report;
  for (std::size_t n : ladder) {
    const GridSpec grid(n, one_dimensional ? 1 : n, ex.lx(), ex.ly());
    StateTriple init{Field::from_function(grid, [&](double x, double y) { return ex.values(x, y, 0.0)[0]; }),
                     Field::from_function(grid, [&](double x, double y) { return ex.values(x, y, 0.0)[1]; }),
                     Field::from_function(grid, [&](double x, double y) { return ex.values(x, y, 0.0)[2]; }),
                     0.0};
    const Trajectory traj = run(init, p, level_cfg);
    const StateTriple& fin = traj.snapshots.back();

    ConvergenceLevel lvl;
    lvl.n = n;
    lvl.h = grid.hx();
    lvl.steps = traj.dt_history.size();
    const Field* comps[] = {&fin.u, &fin.v, &fin.w};
    double total = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      const Field exact_s = Field::from_function(
          grid, [&](double x, double y) { return ex.jet(s, x, y, fin.t).value; });
      const double e = norms(*comps[s] - exact_s).l2;
      lvl.error_l2[s] = e;
      total += e * e;
    }
    lvl.error_total = std::sqrt(total);
    report.levels.push_back(lvl);
  }

  for (std::size_t k = 0; k + 1 < report.levels.size(); ++k) {
    const auto& a = report.levels[k];
    const auto& b = report.levels[k + 1];
    if (!(b.error_total < a.error_total)) report.monotone = false;
    report.orders.push_back(std::log(a.error_total / b.error_total) / std::log(a.h / b.h));
  }
  report.observed_order = report.orders.back();
  return report;
}

}  // namespace alarm_taxis
