#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace alarm_taxis {

/**
 * Axis-aligned rectangle [0, lx] x [0, ly] split into nx x ny cells.
 *
 * Fields live at cell centers, row-major: index(i, j) = j * nx + i with i
 * running along x. ny == 1 selects 1D mode (no y faces).
 */
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(std::size_t nx, std::size_t ny, double lx, double ly);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double hx() const { return lx_ / static_cast<double>(nx_); }
  double hy() const { return ly_ / static_cast<double>(ny_); }
  double h_min() const;
  double cell_area() const { return hx() * hy(); }
  double measure() const { return lx_ * ly_; }
  std::size_t size() const { return nx_ * ny_; }
  bool is_1d() const { return ny_ == 1; }

  std::size_t index(std::size_t i, std::size_t j) const { return j * nx_ + i; }
  double x_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * hx(); }
  double y_center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * hy(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  std::size_t nx_ = 2;
  std::size_t ny_ = 1;
  double lx_ = 1.0;
  double ly_ = 1.0;
};

/// Cell-centered scalar field on a GridSpec.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& grid, double value = 0.0);
  Field(const GridSpec& grid, std::vector<double> values);

  template <class F>
  static Field from_function(const GridSpec& grid, F&& f) {
    Field out(grid);
    for (std::size_t j = 0; j < grid.ny(); ++j)
      for (std::size_t i = 0; i < grid.nx(); ++i)
        out.values_[grid.index(i, j)] = f(grid.x_center(i), grid.y_center(j));
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }
  double at(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }

  double max() const;
  double min() const;

  /// Throws std::domain_error naming the first non-finite cell.
  void require_finite(const std::string& what) const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

  friend bool operator==(const Field&, const Field&) = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, double s);
Field operator*(double s, Field a);
/// Cell-wise product.
Field hadamard(const Field& a, const Field& b);

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// 5-point (3-point in 1D) Neumann Laplacian; ghost cells copy the boundary cell.
Field laplacian(const Field& f);

/**
 * Upwind discretisation of +div(carrier * grad(potential)).
 *
 * Face flux = carrier[upwind] * (psi_right - psi_left) / h, where the upwind
 * cell is the one the drift grad(psi) points away from. Equal potentials give
 * exactly zero flux; boundary faces carry none.
 */
Field taxis_divergence(const Field& carrier, const Field& potential, const GridSpec& grid);

/// Midpoint rule: hx * hy * sum(values).
double integrate(const Field& f);

Norms norms(const Field& f);

/**
 * Face-based discrete integral of |grad f|^2 (optionally weighted).
 *
 * Each interior face contributes ((f_R - f_L) / h)^2 * hx * hy; with a weight
 * the term is scaled by the harmonic mean of the two adjacent weights.
 */
double grad_sq_integral(const Field& f, const std::optional<Field>& weight = std::nullopt);

/// Face-normal gradients averaged onto cells (boundary faces count as zero).
struct CellGradient {
  std::vector<double> gx;
  std::vector<double> gy;
};
CellGradient cell_gradient(const Field& f);

}  // namespace alarm_taxis
