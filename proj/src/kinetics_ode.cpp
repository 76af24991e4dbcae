#include "alarm_taxis/kinetics_ode.hpp"

#include <algorithm>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

namespace alarm_taxis {

KineticState kinetics_rhs(const KineticState& y, const Params& p) {
  // Trajectories stay in the closed positive octant; tiny negative round-off
  // from the stepper is projected out only for the rate evaluation.
  const double u = std::max(y[0], 0.0), v = std::max(y[1], 0.0), w = std::max(y[2], 0.0);
  return {reaction_f(u, v, w, p), reaction_g(u, v, w, p), reaction_h(u, v, w, p)};
}

std::vector<KineticState> integrate_kinetics(const KineticState& y0, const Params& p,
                                             const std::vector<double>& times, double abs_tol,
                                             double rel_tol) {
  namespace odeint = boost::numeric::odeint;
  if (!std::is_sorted(times.begin(), times.end()))
    throw std::invalid_argument("integrate_kinetics: times must be sorted");
  if (!times.empty() && times.front() < 0.0)
    throw std::invalid_argument("integrate_kinetics: times must be >= 0");

  std::vector<KineticState> out;
  out.reserve(times.size());
  KineticState y = y0;
  double t = 0.0;
  auto system = [&p](const KineticState& x, KineticState& dxdt, double) { dxdt = kinetics_rhs(x, p); };
  auto stepper = odeint::make_dense_output(abs_tol, rel_tol, odeint::runge_kutta_dopri5<KineticState>());
  for (double target : times) {
    if (target > t) {
      odeint::integrate_adaptive(stepper, system, y, t, target, std::min(1e-3, target - t));
      t = target;
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace alarm_taxis
