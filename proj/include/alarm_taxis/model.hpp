#pragma once

#include <array>
#include <string>
#include <vector>

#include "alarm_taxis/grid.hpp"

namespace alarm_taxis {

/// Model coefficients. Everything is strictly positive except xi >= 0.
struct Params {
  double d1 = 1.0, d2 = 1.0, d3 = 1.0;
  double xi = 0.0;
  double chi = 1.0;
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1.0;
  double mu1 = 1.0, mu2 = 1.0, mu3 = 1.0;
  double a1 = 1.0, a2 = 1.0, a3 = 1.0;
  double b1 = 1.0, b2 = 1.0, b3 = 1.0;

  /// Throws std::invalid_argument naming the first offending coefficient.
  void validate() const;

  double lambda_max() const;
  double mu_min() const;
};

/// Weights eta1, eta2 of the L1 combination u + eta1 v + eta2 w.
struct CombinationWeights {
  double eta1 = 0.0;
  double eta2 = 0.0;
};

/// eta1 = min{1, a1/b1}/2, eta2 = min{1, a2/b2, a3 eta1/b3}/2.
CombinationWeights combination_weights(const Params& p);

/// True iff b1 eta1 <= a1, b2 eta2 <= a2, b3 eta2 <= a3 eta1 and both lie in (0, 1).
bool combination_weights_admissible(const Params& p, const CombinationWeights& eta);

struct StateTriple {
  Field u, v, w;
  double t = 0.0;

  const GridSpec& grid() const { return u.grid(); }
  /// Shared grid, nonnegative and finite cells, t >= 0.
  void validate() const;

  friend bool operator==(const StateTriple&, const StateTriple&) = default;
};

double reaction_f(double u, double v, double w, const Params& p);
double reaction_g(double u, double v, double w, const Params& p);
double reaction_h(double u, double v, double w, const Params& p);

/// Analytic Jacobian of (f, g, h), row-major.
std::array<double, 9> kinetics_jacobian(double u, double v, double w, const Params& p);

/// Row-sum bound on |D(f, g, h)| over the box [0,U] x [0,V] x [0,W].
double kinetics_lipschitz(double u_max, double v_max, double w_max, const Params& p);

/**
 * Smooth step: 1 on (-inf, 0], 0 on [1, inf),
 * sigma(x) = q(1-x) / (q(x) + q(1-x)) with q(x) = exp(-1/x) for x > 0.
 */
double mollifier_step(double x);
double mollifier_step_prime(double x);

/// sup |sigma'| on [0, 1], sampled once on 10^5 + 1 points (cached).
double mollifier_step_prime_max();

struct CutoffSpec {
  double eps = 1.0;
  double sigma_prime_bound = 1.0;

  /// eps in (0, 1]; bound = 1 + 2 max|sigma'|.
  static CutoffSpec make(double eps);
};

/// s * sigma(eps s - 1): identity up to 1/eps, zero from 2/eps.
double sigma_eps(double s, const CutoffSpec& c);
double sigma_eps_prime(double s, const CutoffSpec& c);

}  // namespace alarm_taxis
