#pragma once

#include <array>
#include <vector>

#include "alarm_taxis/model.hpp"

namespace alarm_taxis {

using KineticState = std::array<double, 3>;

/// Spatially homogeneous dynamics u' = f, v' = g, w' = h.
KineticState kinetics_rhs(const KineticState& y, const Params& p);

/**
 * Adaptive Dormand-Prince integration of the kinetic ODE.
 *
 * Returns the state at every requested time (sorted, >= 0). Tolerances are
 * absolute and relative.
 */
std::vector<KineticState> integrate_kinetics(const KineticState& y0, const Params& p,
                                             const std::vector<double>& times,
                                             double abs_tol = 1e-12, double rel_tol = 1e-12);

}  // namespace alarm_taxis
