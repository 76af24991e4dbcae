#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "alarm_taxis/model.hpp"

namespace alarm_taxis {

/// z*(x, y, t) = base + amplitude * exp(-decay t) * cos(kx pi x / lx) * cos(ky pi y / ly).
struct ManufacturedComponent {
  double base = 1.0;
  double amplitude = 0.0;
  int kx = 1;
  int ky = 1;
  double decay = 0.0;
};

/**
 * Closed-form manufactured triple with zero normal derivative on the
 * rectangle boundary. Source terms are the hand-derived residuals of the
 * unregularised system (S = identity).
 */
class ManufacturedSolution {
 public:
  ManufacturedSolution(std::array<ManufacturedComponent, 3> components, double lx, double ly);

  struct Jet {
    double value = 0.0;
    double dt = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    double lap = 0.0;
  };

  Jet jet(std::size_t species, double x, double y, double t) const;
  std::array<double, 3> values(double x, double y, double t) const;

  /// s = z*_t - (spatial operator + kinetics) applied to z*.
  std::array<double, 3> source(double x, double y, double t, const Params& p, bool kinetics,
                               bool taxis = true) const;

  const std::array<ManufacturedComponent, 3>& components() const { return comps_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }

 private:
  std::array<ManufacturedComponent, 3> comps_;
  double lx_, ly_;
};

/// Manufactured-solution / reduced-physics switch for the solver.
struct MmsDescriptor {
  /// false drops f, g, h from the right-hand side.
  bool kinetics = true;
  /// false drops both taxis terms (pure diffusion-reaction).
  bool taxis = true;
  /// Absent means zero source.
  std::optional<ManufacturedSolution> exact;
};

}  // namespace alarm_taxis
