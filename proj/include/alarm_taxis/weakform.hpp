#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "alarm_taxis/grid.hpp"
#include "alarm_taxis/model.hpp"
#include "alarm_taxis/trajectory.hpp"

namespace alarm_taxis {

/// beta(s) = sigma(2 |s - c| / r - 1): 1 within r/2 of c, 0 beyond r. Infinite radius gives 1.
struct Bump {
  double center = 0.0;
  double radius = std::numeric_limits<double>::infinity();

  bool is_constant() const { return !std::isfinite(radius); }
  double value(double s) const;
  double derivative(double s) const;
};

/// Finite linear combination of tensor bumps phi(x, y, t) = c bx(x) by(y) bt(t).
class TestFunction {
 public:
  struct Term {
    double coef = 1.0;
    Bump x, y, t;
  };

  TestFunction() = default;
  TestFunction(Bump x, Bump y, Bump t, double coef = 1.0);

  double value(double x, double y, double t) const;
  std::array<double, 2> grad(double x, double y, double t) const;
  double dt(double x, double y, double t) const;

  /// Right end of the time support (infinite if some term is constant in t).
  double time_support_end() const;
  /// Shortest time-support length of any term, clipped to t >= 0.
  double time_support_length() const;
  /// All coefficients >= 0, hence phi >= 0.
  bool nonnegative() const;

  const std::vector<Term>& terms() const { return terms_; }

  TestFunction& operator+=(const TestFunction& other);
  friend TestFunction operator+(TestFunction a, const TestFunction& b) { return a += b; }
  friend TestFunction operator*(double s, TestFunction a);

 private:
  std::vector<Term> terms_;
};

/**
 * Smoothed min{s, k}: identity up to k, constant k + k/2 from 2k on, with
 * derivative sigma(s / k - 1). Concave with compactly supported derivative.
 */
class SmoothedMin {
 public:
  explicit SmoothedMin(double k);
  double k() const { return k_; }
  double value(double s) const;
  double d1(double s) const;
  double d2(double s) const;

 private:
  double k_;
};

/// phi(v, w) = A(v) + B(w); an absent part is the zero function.
struct RenormFunction {
  std::optional<SmoothedMin> a;
  std::optional<SmoothedMin> b;

  double A(double v) const { return a ? a->value(v) : 0.0; }
  double A1(double v) const { return a ? a->d1(v) : 0.0; }
  double A2(double v) const { return a ? a->d2(v) : 0.0; }
  double B(double w) const { return b ? b->value(w) : 0.0; }
  double B1(double w) const { return b ? b->d1(w) : 0.0; }
  double B2(double w) const { return b ? b->d2(w) : 0.0; }
  double operator()(double v, double w) const { return A(v) + B(w); }
};

/// A = B = smoothed min with the same k, for each k in the list.
std::vector<RenormFunction> make_renorm_family(const std::vector<double>& ks = {1.0, 4.0, 16.0});

/**
 * Lattice of tensor bumps: m x m centers (m along x only in 1D), three
 * support scales, emitted scale by scale; the first n are returned. n = 1
 * gives the single bump centered in the domain.
 */
std::vector<TestFunction> make_test_family(const GridSpec& grid, double t_end, std::size_t n);

/// Signed residual (LHS - RHS) together with the sum of the absolute values of its terms.
struct WeakResult {
  double residual = 0.0;
  double magnitude = 0.0;
};

WeakResult evaluate_weak_u(const Trajectory& traj, const TestFunction& phi, const Params& p);
WeakResult evaluate_weak_v(const Trajectory& traj, const TestFunction& phi, const Params& p);
WeakResult evaluate_weak_w(const Trajectory& traj, const TestFunction& phi, const Params& p);
WeakResult evaluate_supersolution(const Trajectory& traj, const RenormFunction& phi,
                                  const TestFunction& psi, const Params& p);

double weak_residual_u(const Trajectory& traj, const TestFunction& phi, const Params& p);
double weak_residual_v(const Trajectory& traj, const TestFunction& phi, const Params& p);
/// Plain weak residual of the w equation, using the logarithmic w-gradient reconstruction.
double weak_residual_w(const Trajectory& traj, const TestFunction& phi, const Params& p);
/// LHS - RHS of the renormalised supersolution inequality; should be >= -tol.
double supersolution_defect(const Trajectory& traj, const RenormFunction& phi, const TestFunction& psi,
                            const Params& p);

/// Relative slack used by the residual report.
inline constexpr double kWeakRelTol = 0.05;

struct ResidualRow {
  std::size_t id = 0;
  std::string kind;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  double max_abs_u = 0.0;
  double max_abs_v = 0.0;
  double max_abs_defect = 0.0;
  double min_defect = 0.0;

  bool passed() const;
  std::string to_text() const;
};

/// Evaluates the u, v identities and the supersolution inequality over the family.
ResidualReport residual_report(const Trajectory& traj, const Params& p,
                               const std::vector<TestFunction>& family,
                               const std::vector<RenormFunction>& renorms);

}  // namespace alarm_taxis
