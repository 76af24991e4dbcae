#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "alarm_taxis/solver.hpp"
#include "alarm_taxis/weakform.hpp"

using namespace alarm_taxis;

namespace {

using Profile = std::function<std::array<double, 3>(double x, double y, double t)>;

// Snapshots of a prescribed field triple every dt on [0, t_end].
Trajectory synthetic(const GridSpec& g, double t_end, double dt, const Profile& f) {
  Trajectory t;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double time = t_end * static_cast<double>(k) / static_cast<double>(steps);
    StateTriple s{Field(g), Field(g), Field(g), time};
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto v = f(g.x_center(i), g.y_center(j), time);
        s.u.at(i, j) = v[0], s.v.at(i, j) = v[1], s.w.at(i, j) = v[2];
      }
    t.snapshots.push_back(std::move(s));
  }
  return t;
}

double quad(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
}

double bump_integral(const Bump& b, double lo, double hi) {
  return quad([&](double s) { return b.value(s); }, std::max(lo, b.center - b.radius), std::min(hi, b.center + b.radius));
}

const Bump kBx{0.5, 0.4}, kBy{0.45, 0.35}, kBt{0.5, 0.3};

}  // namespace

TEST_CASE("zero trajectory gives zero residuals") {
  const GridSpec g(12, 12, 1.0, 1.0);
  const Trajectory t = synthetic(g, 1.0, 0.01, [](double, double, double) { return std::array<double, 3>{}; });
  Params p;
  p.xi = 1.3;
  for (const auto& phi : make_test_family(g, 1.0, 27)) {
    CHECK(weak_residual_u(t, phi, p) == 0.0);
    CHECK(weak_residual_v(t, phi, p) == 0.0);
    CHECK(weak_residual_w(t, phi, p) == 0.0);
    for (const auto& r : make_renorm_family()) CHECK(supersolution_defect(t, r, phi, p) == 0.0);
  }
}

TEST_CASE("u residual of a non-solution matches the independent space-time integral") {
  // u = 1 + t, v = w = 0 with unit rates: u_t - f = 1 + t + t^2, so LHS - RHS is
  // int int (1 + t + t^2) phi.
  const GridSpec g(20, 20, 1.0, 1.0);
  const Trajectory t = synthetic(g, 1.0, 0.002, [](double, double, double s) { return std::array<double, 3>{1.0 + s, 0.0, 0.0}; });
  const TestFunction phi(kBx, kBy, kBt, 2.0);
  const double expect = 2.0 * bump_integral(kBx, 0.0, 1.0) * bump_integral(kBy, 0.0, 1.0) *
                        quad([](double s) { return (1.0 + s + s * s) * kBt.value(s); }, 0.2, 0.8);
  CHECK(weak_residual_u(t, phi, Params{}) == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("stationary spatially constant state has a vanishing u residual") {
  const GridSpec g(10, 10, 1.0, 1.0);
  const Trajectory t = synthetic(g, 1.0, 0.005, [](double, double, double) { return std::array<double, 3>{1.0, 0.0, 0.0}; });
  const TestFunction phi(kBx, kBy, kBt);
  const WeakResult r = evaluate_weak_u(t, phi, Params{});
  CHECK(std::abs(r.residual) < 1e-6 * std::max(1.0, r.magnitude));
}

TEST_CASE("taxis term drops when u is spatially constant or xi = 0") {
  const GridSpec g(16, 16, 1.0, 1.0);
  const Trajectory t = synthetic(g, 1.0, 0.01, [](double x, double y, double s) {
    return std::array<double, 3>{1.0 + s, 1.0 + 0.3 * std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y), 0.5};
  });
  Params p0, p2;
  p2.xi = 2.0;
  const TestFunction phi(kBx, kBy, kBt);
  CHECK(weak_residual_v(t, phi, p0) == weak_residual_v(t, phi, p2));
}

TEST_CASE("residuals are linear in the test function") {
  const GridSpec g(16, 16, 2.0, 2.0);
  SolverConfig cfg;
  cfg.regime = Regime::full;
  cfg.t_end = 1.0;
  cfg.snapshot_interval = 0.01;
  Params p;
  p.xi = 0.7;
  StateTriple s0{Field::from_function(g, [](double x, double y) { return 1.0 + 0.3 * std::cos(std::numbers::pi * x / 2) * std::cos(std::numbers::pi * y / 2); }),
                 Field::from_function(g, [](double x, double) { return 0.8 + 0.2 * std::cos(std::numbers::pi * x); }),
                 Field::from_function(g, [](double, double y) { return 0.5 + 0.4 * std::cos(std::numbers::pi * y / 2); }), 0.0};
  const Trajectory t = run(s0, p, cfg);
  const auto family = make_test_family(g, 1.0, 27);
  const TestFunction& a = family[3];
  const TestFunction& b = family[20];
  const TestFunction sum = a + 2.5 * b;
  auto close = [](double lhs, double rhs) { return std::abs(lhs - rhs) <= 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)}); };
  CHECK(close(weak_residual_u(t, sum, p), weak_residual_u(t, a, p) + 2.5 * weak_residual_u(t, b, p)));
  CHECK(close(weak_residual_v(t, sum, p), weak_residual_v(t, a, p) + 2.5 * weak_residual_v(t, b, p)));
  const RenormFunction r = make_renorm_family()[1];
  CHECK(close(supersolution_defect(t, r, sum, p), supersolution_defect(t, r, a, p) + 2.5 * supersolution_defect(t, r, b, p)));

  // With B the identity on the attained range and A absent the defect is the plain w residual.
  CHECK(t.snapshots.back().w.max() < 16.0);
  const RenormFunction b_only{std::nullopt, SmoothedMin(16.0)};
  for (const auto& phi : family) {
    const double d = supersolution_defect(t, b_only, phi, p), w = weak_residual_w(t, phi, p);
    CHECK(std::abs(d - w) <= 1e-12 * std::max(1.0, std::abs(w)));
  }
}

TEST_CASE("support and sign checks") {
  const GridSpec g(8, 8, 1.0, 1.0);
  const Trajectory dense = synthetic(g, 1.0, 0.01, [](double, double, double) { return std::array<double, 3>{1, 1, 1}; });
  const Trajectory sparse = synthetic(g, 1.0, 0.1, [](double, double, double) { return std::array<double, 3>{1, 1, 1}; });
  CHECK_THROWS_AS(weak_residual_u(dense, TestFunction(kBx, kBy, Bump{0.9, 0.3}), Params{}), std::invalid_argument);
  CHECK_THROWS_AS(weak_residual_u(sparse, TestFunction(kBx, kBy, kBt), Params{}), std::invalid_argument);
  const TestFunction negative = -1.0 * TestFunction(kBx, kBy, kBt);
  CHECK_THROWS_AS(supersolution_defect(dense, make_renorm_family()[0], negative, Params{}), std::invalid_argument);
  CHECK_NOTHROW(weak_residual_v(dense, negative, Params{}));
}

TEST_CASE("test family construction") {
  const GridSpec g(10, 10, 2.0, 1.0);
  const auto one = make_test_family(g, 1.0, 1);
  REQUIRE(one.size() == 1);
  REQUIRE(one[0].terms().size() == 1);
  CHECK(one[0].terms()[0].x.center == doctest::Approx(1.0));
  CHECK(one[0].terms()[0].y.center == doctest::Approx(0.5));

  const auto fam = make_test_family(g, 1.0, 27);
  REQUIRE(fam.size() == 27);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ux(0.0, 2.0), uy(0.0, 1.0), ut(0.0, 1.0);
  for (const auto& phi : fam) {
    CHECK(phi.nonnegative());
    CHECK(phi.time_support_end() < 1.0);
    const auto& term = phi.terms()[0];
    // Zero on the faces of the support box.
    CHECK(phi.value(term.x.center + term.x.radius, uy(rng), ut(rng)) == 0.0);
    CHECK(phi.value(ux(rng), uy(rng), term.t.center - term.t.radius) == 0.0);
  }
  for (int k = 0; k < 100; ++k) {
    const TestFunction& phi = fam[static_cast<std::size_t>(k) % fam.size()];
    const double x = ux(rng), y = uy(rng), t = ut(rng), d = 1e-6;
    const double fd = (phi.value(x, y, t + d) - phi.value(x, y, t - d)) / (2 * d);
    CHECK(std::abs(fd - phi.dt(x, y, t)) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
  CHECK_THROWS_AS(make_test_family(g, 1.0, 0), std::invalid_argument);
}

TEST_CASE("smoothed min") {
  const SmoothedMin m(2.0);
  CHECK(m.value(1.3) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(m.value(2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.value(4.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m.value(9.0) == doctest::Approx(3.0).epsilon(1e-12));
  // The antiderivative of sigma(s / k - 1) over [k, 2k] is k / 2 by the symmetry sigma(x) + sigma(1 - x) = 1.
  CHECK(m.value(3.0) == doctest::Approx(2.0 + quad([](double s) { return mollifier_step(s / 2.0 - 1.0); }, 2.0, 3.0)).epsilon(1e-12));
  for (double s = 0.05; s < 5.0; s += 0.05) {
    const double d = 1e-6;
    CHECK(m.d1(s) == doctest::Approx((m.value(s + d) - m.value(s - d)) / (2 * d)).epsilon(1e-6));
    CHECK(m.d2(s) <= 0.0);
  }
  CHECK_THROWS_AS(SmoothedMin(0.0), std::invalid_argument);
}
