#include "alarm_taxis/weakform.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace alarm_taxis {

double Bump::value(double s) const {
  if (is_constant()) return 1.0;
  return mollifier_step(2.0 * std::abs(s - center) / radius - 1.0);
}

double Bump::derivative(double s) const {
  if (is_constant() || s == center) return 0.0;
  const double sign = s > center ? 1.0 : -1.0;
  return mollifier_step_prime(2.0 * std::abs(s - center) / radius - 1.0) * 2.0 * sign / radius;
}

TestFunction::TestFunction(Bump x, Bump y, Bump t, double coef) {
  if (!(x.radius > 0.0) || !(y.radius > 0.0) || !(t.radius > 0.0))
    throw std::invalid_argument("TestFunction: bump radii must be > 0");
  terms_.push_back({coef, x, y, t});
}

double TestFunction::value(double x, double y, double t) const {
  double s = 0.0;
  for (const auto& k : terms_) s += k.coef * k.x.value(x) * k.y.value(y) * k.t.value(t);
  return s;
}

std::array<double, 2> TestFunction::grad(double x, double y, double t) const {
  std::array<double, 2> g{0.0, 0.0};
  for (const auto& k : terms_) {
    const double bt = k.coef * k.t.value(t);
    g[0] += bt * k.x.derivative(x) * k.y.value(y);
    g[1] += bt * k.x.value(x) * k.y.derivative(y);
  }
  return g;
}

double TestFunction::dt(double x, double y, double t) const {
  double s = 0.0;
  for (const auto& k : terms_) s += k.coef * k.x.value(x) * k.y.value(y) * k.t.derivative(t);
  return s;
}

double TestFunction::time_support_end() const {
  double end = 0.0;
  for (const auto& k : terms_) end = std::max(end, k.t.center + k.t.radius);
  return end;
}

double TestFunction::time_support_length() const {
  double len = std::numeric_limits<double>::infinity();
  for (const auto& k : terms_)
    len = std::min(len, k.t.center + k.t.radius - std::max(0.0, k.t.center - k.t.radius));
  return len;
}

bool TestFunction::nonnegative() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& k) { return k.coef >= 0.0; });
}

TestFunction& TestFunction::operator+=(const TestFunction& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  return *this;
}

TestFunction operator*(double s, TestFunction a) {
  for (auto& k : a.terms_) k.coef *= s;
  return a;
}

SmoothedMin::SmoothedMin(double k) : k_(k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("SmoothedMin: k must be finite and > 0");
}

namespace {

constexpr std::size_t kStepTableSize = 2048;

// Antiderivative of sigma on [0, 1] at kStepTableSize + 1 equispaced nodes.
const std::vector<double>& step_antiderivative() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kStepTableSize + 1, 0.0);
    const double h = 1.0 / static_cast<double>(kStepTableSize);
    for (std::size_t i = 0; i < kStepTableSize; ++i)
      t[i + 1] = t[i] + boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                            [](double r) { return mollifier_step(r); }, static_cast<double>(i) * h,
                            static_cast<double>(i + 1) * h, 5, 1e-15);
    return t;
  }();
  return table;
}

// int_0^x sigma for x in [0, 1]: table node plus a 15-point Gauss rule on the remainder.
double step_integral(double x) {
  const auto& t = step_antiderivative();
  const double h = 1.0 / static_cast<double>(kStepTableSize);
  const auto i = std::min(static_cast<std::size_t>(x / h), kStepTableSize - 1);
  const double x0 = static_cast<double>(i) * h;
  if (x <= x0) return t[i];
  return t[i] + boost::math::quadrature::gauss<double, 15>::integrate([](double r) { return mollifier_step(r); },
                                                                     x0, x);
}

}  // namespace

double SmoothedMin::value(double s) const {
  if (s <= k_) return s;
  if (s >= 2.0 * k_) return 1.5 * k_;
  return k_ + k_ * step_integral((s - k_) / k_);
}

double SmoothedMin::d1(double s) const { return mollifier_step(s / k_ - 1.0); }
double SmoothedMin::d2(double s) const { return mollifier_step_prime(s / k_ - 1.0) / k_; }

std::vector<RenormFunction> make_renorm_family(const std::vector<double>& ks) {
  std::vector<RenormFunction> out;
  for (double k : ks) out.push_back({SmoothedMin(k), SmoothedMin(k)});
  return out;
}

std::vector<TestFunction> make_test_family(const GridSpec& grid, double t_end, std::size_t n) {
  if (n == 0) throw std::invalid_argument("make_test_family: n must be >= 1");
  if (!(t_end > 0.0)) throw std::invalid_argument("make_test_family: t_end must be > 0");
  const double lx = grid.lx(), ly = grid.ly();
  const Bump flat_y{};

  if (n == 1) {
    const Bump y = grid.is_1d() ? flat_y : Bump{0.5 * ly, 0.4 * ly};
    return {TestFunction(Bump{0.5 * lx, 0.4 * lx}, y, Bump{0.45 * t_end, 0.35 * t_end})};
  }

  // Two of the three time profiles sit on t = 0 so the initial-data term is exercised.
  const double space_scale[] = {0.25, 0.4, 0.6};
  const Bump time_bump[] = {{0.0, 0.6 * t_end}, {0.45 * t_end, 0.35 * t_end}, {0.0, 0.9 * t_end}};
  const std::size_t per_scale = (n + 2) / 3;
  std::size_t mx = 1, my = 1;
  if (grid.is_1d()) {
    mx = per_scale;
  } else {
    while (mx * mx < per_scale) ++mx;
    my = mx;
  }

  std::vector<TestFunction> family;
  for (std::size_t s = 0; s < 3 && family.size() < n; ++s) {
    for (std::size_t j = 0; j < my && family.size() < n; ++j) {
      for (std::size_t i = 0; i < mx && family.size() < n; ++i) {
        const Bump x{(static_cast<double>(i) + 0.5) / static_cast<double>(mx) * lx, space_scale[s] * lx};
        const Bump y = grid.is_1d()
                           ? flat_y
                           : Bump{(static_cast<double>(j) + 0.5) / static_cast<double>(my) * ly, space_scale[s] * ly};
        family.emplace_back(x, y, time_bump[s]);
      }
    }
  }
  return family;
}

namespace {

// Per-snapshot coefficients multiplying phi and its derivatives. Face arrays
// are indexed j * (nx - 1) + i for x faces and j * nx + i for y faces.
struct Coeffs {
  std::vector<double> phi, phit;
  std::vector<double> gx, vx, gy, vy;
};

using CoeffFn = std::function<void(const StateTriple&, Coeffs&)>;

struct Pieces {
  double phi = 0.0, phit = 0.0, grad = 0.0, face = 0.0, initial = 0.0;
  WeakResult result() const {
    return {phi + phit + grad + face + initial,
            std::abs(phi) + std::abs(phit) + std::abs(grad) + std::abs(face) + std::abs(initial)};
  }
};

void check_applicable(const Trajectory& traj, const TestFunction& phi) {
  if (traj.snapshots.size() < 2) throw std::invalid_argument("weak residual: trajectory needs at least two snapshots");
  const double t_end = traj.snapshots.back().t;
  if (!(phi.time_support_end() < t_end))
    throw std::invalid_argument("weak residual: test function support exceeds t_end");
  double gap = 0.0;
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k)
    gap = std::max(gap, traj.snapshots[k].t - traj.snapshots[k - 1].t);
  if (gap > phi.time_support_length() / 20.0 * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "weak residual: snapshot interval " << gap << " exceeds support length / 20 = "
       << phi.time_support_length() / 20.0;
    throw std::invalid_argument(os.str());
  }
}

double bump_mean(const Bump& b, double lo, double hi) {
  if (b.is_constant()) return 1.0;
  return boost::math::quadrature::gauss<double, 10>::integrate([&](double s) { return b.value(s); }, lo, hi) /
         (hi - lo);
}

// Exact pairing of a bump with piecewise-constant data: cell means, dual-cell
// means (faces i | i + 1) and dual-cell means of the derivative.
void bump_tables(const Bump& b, std::size_t n, double h, std::vector<double>& cell, std::vector<double>& face,
                 std::vector<double>& dface) {
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) * h, mid = lo + 0.5 * h;
    cell[i] = bump_mean(b, lo, lo + h);
    if (i + 1 < n) {
      face[i] = bump_mean(b, mid, mid + h);
      dface[i] = (b.value(mid + h) - b.value(mid)) / h;
    }
  }
}

// Solution fields are piecewise constant on cells (values) and dual cells
// (face fluxes); the test function is integrated exactly against them.
// Trapezoid rule over the snapshot times.
WeakResult integrate_against(const Trajectory& traj, const TestFunction& phi, const CoeffFn& coeffs,
                             const std::vector<double>& initial) {
  check_applicable(traj, phi);
  const GridSpec& g = traj.snapshots.front().grid();
  const std::size_t nx = g.nx(), ny = g.ny(), ns = traj.snapshots.size();
  const double area = g.cell_area();

  std::vector<double> wt(ns, 0.0);
  for (std::size_t k = 0; k + 1 < ns; ++k) {
    const double h = traj.snapshots[k + 1].t - traj.snapshots[k].t;
    wt[k] += 0.5 * h;
    wt[k + 1] += 0.5 * h;
  }

  Pieces pc;
  Coeffs c;
  std::vector<double> bxc(nx), byc(ny), bxf(nx), dbxf(nx), byf(ny), dbyf(ny);
  for (std::size_t s = 0; s < ns; ++s) {
    const StateTriple& st = traj.snapshots[s];
    if (!(st.grid() == g)) throw std::invalid_argument("weak residual: snapshots on different grids");
    coeffs(st, c);
    for (const auto& term : phi.terms()) {
      const double bt = term.coef * term.t.value(st.t);
      const double dbt = term.coef * term.t.derivative(st.t);
      if (bt == 0.0 && dbt == 0.0 && !(s == 0 && !initial.empty())) continue;
      bump_tables(term.x, nx, g.hx(), bxc, bxf, dbxf);
      bump_tables(term.y, ny, g.hy(), byc, byf, dbyf);

      double cell_phi = 0.0, cell_phit = 0.0, grad = 0.0, face = 0.0, init = 0.0;
      for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
          const std::size_t k = g.index(i, j);
          const double b = bxc[i] * byc[j];
          cell_phi += c.phi[k] * b;
          cell_phit += c.phit[k] * b;
          if (s == 0 && !initial.empty()) init += initial[k] * b;
        }
      }
      for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
          const std::size_t f = j * (nx - 1) + i;
          grad += c.gx[f] * dbxf[i] * byc[j];
          face += c.vx[f] * bxf[i] * byc[j];
        }
      }
      for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
          const std::size_t f = j * nx + i;
          grad += c.gy[f] * bxc[i] * dbyf[j];
          face += c.vy[f] * bxc[i] * byf[j];
        }
      }
      pc.phi += wt[s] * area * bt * cell_phi;
      pc.phit += wt[s] * area * dbt * cell_phit;
      pc.grad += wt[s] * area * bt * grad;
      pc.face += wt[s] * area * bt * face;
      if (s == 0) pc.initial -= area * bt * init;
    }
  }
  return pc.result();
}

void resize(const GridSpec& g, Coeffs& c) {
  const std::size_t n = g.size();
  const std::size_t nfx = (g.nx() - 1) * g.ny(), nfy = g.nx() * (g.ny() - 1);
  c.phi.assign(n, 0.0);
  c.phit.assign(n, 0.0);
  c.gx.assign(nfx, 0.0);
  c.vx.assign(nfx, 0.0);
  c.gy.assign(nfy, 0.0);
  c.vy.assign(nfy, 0.0);
}

// Calls visit(a, b, inv_h, slot, is_x) for every interior face.
template <class Visit>
void each_face(const GridSpec& g, Visit&& visit) {
  const std::size_t nx = g.nx();
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i + 1 < nx; ++i) visit(g.index(i, j), g.index(i + 1, j), 1.0 / g.hx(), j * (nx - 1) + i, true);
  for (std::size_t j = 0; j + 1 < g.ny(); ++j)
    for (std::size_t i = 0; i < nx; ++i) visit(g.index(i, j), g.index(i, j + 1), 1.0 / g.hy(), j * nx + i, false);
}

inline double upwind(const Field& carrier, std::size_t a, std::size_t b, double dpsi) {
  if (dpsi > 0.0) return carrier[a];
  if (dpsi < 0.0) return carrier[b];
  return 0.0;
}

// d3 grad w - chi w_up grad(uv), with grad w = (w_f + 1) grad ln(w + 1).
inline std::pair<double, double> w_flux(const StateTriple& s, const Field& uv, std::size_t a, std::size_t b,
                                        double ih, const Params& p) {
  const double wf = 0.5 * (s.w[a] + s.w[b]);
  const double gw = (wf + 1.0) * (std::log1p(s.w[b]) - std::log1p(s.w[a])) * ih;
  const double duv = uv[b] - uv[a];
  return {p.d3 * gw - p.chi * upwind(s.w, a, b, duv) * duv * ih, gw};
}

std::vector<double> initial_values(const Trajectory& traj, const std::function<double(std::size_t)>& f) {
  std::vector<double> out(traj.snapshots.front().grid().size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(k);
  return out;
}

}  // namespace

WeakResult evaluate_weak_u(const Trajectory& traj, const TestFunction& phi, const Params& p) {
  auto fill = [&](const StateTriple& s, Coeffs& c) {
    resize(s.grid(), c);
    for (std::size_t k = 0; k < s.grid().size(); ++k) {
      c.phit[k] = -s.u[k];
      c.phi[k] = -reaction_f(s.u[k], s.v[k], s.w[k], p);
    }
    each_face(s.grid(), [&](std::size_t a, std::size_t b, double ih, std::size_t f, bool is_x) {
      (is_x ? c.gx : c.gy)[f] = p.d1 * (s.u[b] - s.u[a]) * ih;
    });
  };
  const StateTriple& s0 = traj.snapshots.front();
  return integrate_against(traj, phi, fill, initial_values(traj, [&](std::size_t k) { return s0.u[k]; }));
}

WeakResult evaluate_weak_v(const Trajectory& traj, const TestFunction& phi, const Params& p) {
  auto fill = [&](const StateTriple& s, Coeffs& c) {
    resize(s.grid(), c);
    for (std::size_t k = 0; k < s.grid().size(); ++k) {
      c.phit[k] = -s.v[k];
      c.phi[k] = -reaction_g(s.u[k], s.v[k], s.w[k], p);
    }
    each_face(s.grid(), [&](std::size_t a, std::size_t b, double ih, std::size_t f, bool is_x) {
      const double du = s.u[b] - s.u[a];
      (is_x ? c.gx : c.gy)[f] = p.d2 * (s.v[b] - s.v[a]) * ih - p.xi * upwind(s.v, a, b, du) * du * ih;
    });
  };
  const StateTriple& s0 = traj.snapshots.front();
  return integrate_against(traj, phi, fill, initial_values(traj, [&](std::size_t k) { return s0.v[k]; }));
}

WeakResult evaluate_weak_w(const Trajectory& traj, const TestFunction& phi, const Params& p) {
  auto fill = [&](const StateTriple& s, Coeffs& c) {
    resize(s.grid(), c);
    const Field uv = hadamard(s.u, s.v);
    for (std::size_t k = 0; k < s.grid().size(); ++k) {
      c.phit[k] = -s.w[k];
      c.phi[k] = -reaction_h(s.u[k], s.v[k], s.w[k], p);
    }
    each_face(s.grid(), [&](std::size_t a, std::size_t b, double ih, std::size_t f, bool is_x) {
      (is_x ? c.gx : c.gy)[f] = w_flux(s, uv, a, b, ih, p).first;
    });
  };
  const StateTriple& s0 = traj.snapshots.front();
  return integrate_against(traj, phi, fill, initial_values(traj, [&](std::size_t k) { return s0.w[k]; }));
}

WeakResult evaluate_supersolution(const Trajectory& traj, const RenormFunction& phi, const TestFunction& psi,
                                  const Params& p) {
  if (!psi.nonnegative()) throw std::invalid_argument("supersolution_defect: test function must be nonnegative");
  auto fill = [&](const StateTriple& s, Coeffs& c) {
    resize(s.grid(), c);
    const Field uv = hadamard(s.u, s.v);
    for (std::size_t k = 0; k < s.grid().size(); ++k) {
      const double u = s.u[k], v = s.v[k], w = s.w[k];
      c.phit[k] = -phi(v, w);
      c.phi[k] = -(reaction_g(u, v, w, p) * phi.A1(v) + reaction_h(u, v, w, p) * phi.B1(w));
    }
    each_face(s.grid(), [&](std::size_t a, std::size_t b, double ih, std::size_t f, bool is_x) {
      const double gv = (s.v[b] - s.v[a]) * ih;
      const double du = s.u[b] - s.u[a];
      const double jv = p.d2 * gv - p.xi * upwind(s.v, a, b, du) * du * ih;
      const auto [jw, gw] = w_flux(s, uv, a, b, ih, p);
      const double vf = 0.5 * (s.v[a] + s.v[b]);
      const double wf = 0.5 * (s.w[a] + s.w[b]);
      (is_x ? c.gx : c.gy)[f] = jv * phi.A1(vf) + jw * phi.B1(wf);
      (is_x ? c.vx : c.vy)[f] = jv * phi.A2(vf) * gv + jw * phi.B2(wf) * gw;
    });
  };
  const StateTriple& s0 = traj.snapshots.front();
  return integrate_against(traj, psi, fill,
                           initial_values(traj, [&](std::size_t k) { return phi(s0.v[k], s0.w[k]); }));
}

double weak_residual_u(const Trajectory& traj, const TestFunction& phi, const Params& p) {
  return evaluate_weak_u(traj, phi, p).residual;
}
double weak_residual_v(const Trajectory& traj, const TestFunction& phi, const Params& p) {
  return evaluate_weak_v(traj, phi, p).residual;
}
double weak_residual_w(const Trajectory& traj, const TestFunction& phi, const Params& p) {
  return evaluate_weak_w(traj, phi, p).residual;
}
double supersolution_defect(const Trajectory& traj, const RenormFunction& phi, const TestFunction& psi,
                            const Params& p) {
  return evaluate_supersolution(traj, phi, psi, p).residual;
}

bool ResidualReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResidualRow& r) { return r.passed; });
}

std::string ResidualReport::to_text() const {
  std::ostringstream os;
  os << "# weak-form residuals over a fixed test family (evidence, not a proof for all test functions)\n"
     << "# tolerance = " << kWeakRelTol << " * (sum of |terms|); identities need |residual| <= tol,"
     << " supersolution rows need residual >= -tol\n"
     << "# the mass inequality is audited at every sampled time; the exceptional null set of the"
     << " continuum statement has no discrete counterpart\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %-12s %24s %24s  %s\n", "id", "kind", "residual", "tolerance", "status");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6zu %-12s %24.17g %24.17g  %s\n", r.id, r.kind.c_str(), r.residual,
                  r.tolerance, r.passed ? "PASS" : "FAIL");
    os << line;
  }
  std::snprintf(line, sizeof line,
                "max|u| %.6e  max|v| %.6e  max|defect| %.6e  min defect %.6e  overall %s\n", max_abs_u,
                max_abs_v, max_abs_defect, min_defect, passed() ? "PASS" : "FAIL");
  os << line;
  return os.str();
}

ResidualReport residual_report(const Trajectory& traj, const Params& p, const std::vector<TestFunction>& family,
                               const std::vector<RenormFunction>& renorms) {
  ResidualReport rep;
  rep.min_defect = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < family.size(); ++id) {
    const WeakResult ru = evaluate_weak_u(traj, family[id], p);
    const WeakResult rv = evaluate_weak_v(traj, family[id], p);
    const double tu = kWeakRelTol * ru.magnitude + 1e-12, tv = kWeakRelTol * rv.magnitude + 1e-12;
    rep.rows.push_back({id, "u", ru.residual, tu, std::abs(ru.residual) <= tu});
    rep.rows.push_back({id, "v", rv.residual, tv, std::abs(rv.residual) <= tv});
    rep.max_abs_u = std::max(rep.max_abs_u, std::abs(ru.residual));
    rep.max_abs_v = std::max(rep.max_abs_v, std::abs(rv.residual));
    for (const auto& phi : renorms) {
      const WeakResult rd = evaluate_supersolution(traj, phi, family[id], p);
      const double td = kWeakRelTol * rd.magnitude + 1e-12;
      std::ostringstream kind;
      kind << "phi_k=" << (phi.a ? phi.a->k() : phi.b ? phi.b->k() : 0.0);
      rep.rows.push_back({id, kind.str(), rd.residual, td, rd.residual >= -td});
      rep.max_abs_defect = std::max(rep.max_abs_defect, std::abs(rd.residual));
      rep.min_defect = std::min(rep.min_defect, rd.residual);
    }
  }
  if (!std::isfinite(rep.min_defect)) rep.min_defect = 0.0;
  return rep;
}

}  // namespace alarm_taxis
