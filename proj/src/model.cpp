#include "alarm_taxis/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace alarm_taxis {

void Params::validate() const {
  const std::pair<const char*, double> positive[] = {
      {"d1", d1},   {"d2", d2},   {"d3", d3},           {"chi", chi},         {"lambda1", lambda1},
      {"lambda2", lambda2},       {"lambda3", lambda3}, {"mu1", mu1},         {"mu2", mu2},
      {"mu3", mu3}, {"a1", a1},   {"a2", a2},           {"a3", a3},           {"b1", b1},
      {"b2", b2},   {"b3", b3}};
  for (const auto& [name, value] : positive) {
    if (!std::isfinite(value) || !(value > 0.0)) {
      std::ostringstream os;
      os << "parameter " << name << " must be finite and > 0, got " << value;
      throw std::invalid_argument(os.str());
    }
  }
  if (!std::isfinite(xi) || xi < 0.0) {
    std::ostringstream os;
    os << "parameter xi (prey-taxis coefficient) must be >= 0, got " << xi;
    throw std::invalid_argument(os.str());
  }
}

double Params::lambda_max() const { return std::max({lambda1, lambda2, lambda3}); }
double Params::mu_min() const { return std::min({mu1, mu2, mu3}); }

CombinationWeights combination_weights(const Params& p) {
  CombinationWeights eta;
  eta.eta1 = 0.5 * std::min(1.0, p.a1 / p.b1);
  eta.eta2 = 0.5 * std::min({1.0, p.a2 / p.b2, p.a3 * eta.eta1 / p.b3});
  return eta;
}

bool combination_weights_admissible(const Params& p, const CombinationWeights& eta) {
  const bool in_range = eta.eta1 > 0.0 && eta.eta1 < 1.0 && eta.eta2 > 0.0 && eta.eta2 < 1.0;
  return in_range && p.b1 * eta.eta1 <= p.a1 && p.b2 * eta.eta2 <= p.a2 &&
         p.b3 * eta.eta2 <= p.a3 * eta.eta1;
}

void StateTriple::validate() const {
  if (!(u.grid() == v.grid()) || !(u.grid() == w.grid()))
    throw std::invalid_argument("StateTriple: components live on different grids");
  if (!(t >= 0.0)) throw std::invalid_argument("StateTriple: t must be >= 0");
  const std::pair<const char*, const Field*> comps[] = {{"u", &u}, {"v", &v}, {"w", &w}};
  for (const auto& [name, f] : comps) {
    f->require_finite(std::string("state component ") + name);
    for (std::size_t k = 0; k < f->size(); ++k) {
      if ((*f)[k] < 0.0) {
        std::ostringstream os;
        os << "state component " << name << " negative (" << (*f)[k] << ") in cell (i="
           << k % f->grid().nx() << ", j=" << k / f->grid().nx() << ") at t=" << t;
        throw std::domain_error(os.str());
      }
    }
  }
}

static void require_nonnegative(double u, double v, double w, const char* fn) {
  if (!(u >= 0.0) || !(v >= 0.0) || !(w >= 0.0)) {
    std::ostringstream os;
    os << fn << ": densities must be >= 0, got (" << u << ", " << v << ", " << w << ")";
    throw std::domain_error(os.str());
  }
}

double reaction_f(double u, double v, double w, const Params& p) {
  require_nonnegative(u, v, w, "reaction_f");
  return u * (p.lambda1 - p.mu1 * u - p.a1 * v - p.a2 * w);
}

double reaction_g(double u, double v, double w, const Params& p) {
  require_nonnegative(u, v, w, "reaction_g");
  return v * (p.lambda2 - p.mu2 * v + p.b1 * u - p.a3 * w);
}

double reaction_h(double u, double v, double w, const Params& p) {
  require_nonnegative(u, v, w, "reaction_h");
  return w * (p.lambda3 - p.mu3 * w + p.b2 * u + p.b3 * v);
}

std::array<double, 9> kinetics_jacobian(double u, double v, double w, const Params& p) {
  return {p.lambda1 - 2.0 * p.mu1 * u - p.a1 * v - p.a2 * w,
          -p.a1 * u,
          -p.a2 * u,
          p.b1 * v,
          p.lambda2 - 2.0 * p.mu2 * v + p.b1 * u - p.a3 * w,
          -p.a3 * v,
          p.b2 * w,
          p.b3 * w,
          p.lambda3 - 2.0 * p.mu3 * w + p.b2 * u + p.b3 * v};
}

double kinetics_lipschitz(double U, double V, double W, const Params& p) {
  const double row_f = (p.lambda1 + 2.0 * p.mu1 * U + p.a1 * V + p.a2 * W) + p.a1 * U + p.a2 * U;
  const double row_g = p.b1 * V + (p.lambda2 + 2.0 * p.mu2 * V + p.b1 * U + p.a3 * W) + p.a3 * V;
  const double row_h = p.b2 * W + p.b3 * W + (p.lambda3 + 2.0 * p.mu3 * W + p.b2 * U + p.b3 * V);
  return std::max({row_f, row_g, row_h});
}

namespace {

inline double q(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

}  // namespace

double mollifier_step(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  const double a = q(1.0 - x);
  const double b = q(x);
  return a / (a + b);
}

double mollifier_step_prime(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double s = mollifier_step(x);
  const double t = 1.0 - s;
  // Underflowed tails: the exact derivative is below the double range there.
  if (s == 0.0 || t == 0.0) return 0.0;
  return -s * t * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)));
}

double mollifier_step_prime_max() {
  static const double cached = [] {
    constexpr int n = 100000;
    double m = 0.0;
    for (int k = 0; k <= n; ++k)
      m = std::max(m, std::abs(mollifier_step_prime(static_cast<double>(k) / n)));
    return m;
  }();
  return cached;
}

CutoffSpec CutoffSpec::make(double eps) {
  if (!(eps > 0.0) || eps > 1.0) {
    std::ostringstream os;
    os << "cutoff eps must lie in (0, 1], got " << eps;
    throw std::invalid_argument(os.str());
  }
  return CutoffSpec{eps, 1.0 + 2.0 * mollifier_step_prime_max()};
}

double sigma_eps(double s, const CutoffSpec& c) {
  if (!(s >= 0.0)) throw std::domain_error("sigma_eps: argument must be >= 0");
  const double x = c.eps * s - 1.0;
  if (x <= 0.0) return s;
  return s * mollifier_step(x);
}

double sigma_eps_prime(double s, const CutoffSpec& c) {
  if (!(s >= 0.0)) throw std::domain_error("sigma_eps_prime: argument must be >= 0");
  const double x = c.eps * s - 1.0;
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return mollifier_step(x) + c.eps * s * mollifier_step_prime(x);
}

}  // namespace alarm_taxis
