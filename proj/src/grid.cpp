#include "alarm_taxis/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace alarm_taxis {

GridSpec::GridSpec(std::size_t nx, std::size_t ny, double lx, double ly)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
  // Operators are well defined from two cells on; simulations ask for three
  // (enforced at configuration time).
  if (nx < 2) throw std::invalid_argument("GridSpec: nx must be >= 2");
  if (ny < 1) throw std::invalid_argument("GridSpec: ny must be >= 1");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw std::invalid_argument("GridSpec: side lengths must be finite and > 0");
}

double GridSpec::h_min() const { return is_1d() ? hx() : std::min(hx(), hy()); }

Field::Field(const GridSpec& grid, double value) : grid_(grid), values_(grid.size(), value) {}

Field::Field(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    std::ostringstream os;
    os << "Field: expected " << grid_.size() << " values, got " << values_.size();
    throw std::invalid_argument(os.str());
  }
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

void Field::require_finite(const std::string& what) const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      std::ostringstream os;
      os << what << ": non-finite value " << values_[k] << " in cell (i=" << k % grid_.nx()
         << ", j=" << k / grid_.nx() << ")";
      throw std::domain_error(os.str());
    }
  }
}

static void require_same_grid(const Field& a, const Field& b, const char* op) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument(std::string(op) + ": grid mismatch");
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other, "operator+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other, "operator-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, double s) { return a *= s; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
  require_same_grid(a, b, "hadamard");
  Field out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

Field laplacian(const Field& f) {
  f.require_finite("laplacian");
  const GridSpec& g = f.grid();
  const std::size_t nx = g.nx(), ny = g.ny();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  Field out(g);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double c = f.at(i, j);
      const double w = i > 0 ? f.at(i - 1, j) : c;
      const double e = i + 1 < nx ? f.at(i + 1, j) : c;
      double val = (e - 2.0 * c + w) * ihx2;
      if (ny > 1) {
        const double s = j > 0 ? f.at(i, j - 1) : c;
        const double n = j + 1 < ny ? f.at(i, j + 1) : c;
        val += (n - 2.0 * c + s) * ihy2;
      }
      out.at(i, j) = val;
    }
  }
  return out;
}

namespace {

// Signed upwind flux across a face from cell `l` (low side) to `r` (high side).
inline double upwind_flux(double carrier_l, double carrier_r, double psi_l, double psi_r,
                          double inv_h) {
  const double dpsi = psi_r - psi_l;
  if (dpsi > 0.0) return carrier_l * dpsi * inv_h;
  if (dpsi < 0.0) return carrier_r * dpsi * inv_h;
  return 0.0;
}

}  // namespace

Field taxis_divergence(const Field& carrier, const Field& potential, const GridSpec& grid) {
  if (!(carrier.grid() == grid) || !(potential.grid() == grid))
    throw std::invalid_argument("taxis_divergence: grid mismatch");
  carrier.require_finite("taxis_divergence carrier");
  potential.require_finite("taxis_divergence potential");
  const std::size_t nx = grid.nx(), ny = grid.ny();
  const double ihx = 1.0 / grid.hx(), ihy = 1.0 / grid.hy();
  Field out(grid);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double flux = upwind_flux(carrier.at(i, j), carrier.at(i + 1, j), potential.at(i, j),
                                      potential.at(i + 1, j), ihx);
      out.at(i, j) += flux * ihx;
      out.at(i + 1, j) -= flux * ihx;
    }
  }
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double flux = upwind_flux(carrier.at(i, j), carrier.at(i, j + 1), potential.at(i, j),
                                      potential.at(i, j + 1), ihy);
      out.at(i, j) += flux * ihy;
      out.at(i, j + 1) -= flux * ihy;
    }
  }
  return out;
}

double integrate(const Field& f) {
  double sum = 0.0;
  for (double x : f.values()) sum += x;
  return sum * f.grid().cell_area();
}

Norms norms(const Field& f) {
  Norms n;
  double s1 = 0.0, s2 = 0.0;
  for (double x : f.values()) {
    s1 += std::abs(x);
    s2 += x * x;
    n.linf = std::max(n.linf, std::abs(x));
  }
  n.l1 = s1 * f.grid().cell_area();
  n.l2 = std::sqrt(s2 * f.grid().cell_area());
  return n;
}

double grad_sq_integral(const Field& f, const std::optional<Field>& weight) {
  const GridSpec& g = f.grid();
  if (weight) {
    if (!(weight->grid() == g)) throw std::invalid_argument("grad_sq_integral: grid mismatch");
    for (std::size_t k = 0; k < weight->size(); ++k) {
      if (!((*weight)[k] > 0.0)) {
        std::ostringstream os;
        os << "grad_sq_integral: weight must be > 0, got " << (*weight)[k] << " in cell (i="
           << k % g.nx() << ", j=" << k / g.nx() << ")";
        throw std::invalid_argument(os.str());
      }
    }
  }
  auto face_weight = [&](std::size_t a, std::size_t b) {
    if (!weight) return 1.0;
    const double wa = (*weight)[a], wb = (*weight)[b];
    return 2.0 * wa * wb / (wa + wb);
  };
  const std::size_t nx = g.nx(), ny = g.ny();
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  double sum = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const std::size_t a = g.index(i, j), b = g.index(i + 1, j);
      const double q = (f[b] - f[a]) * ihx;
      sum += face_weight(a, b) * q * q;
    }
  }
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t a = g.index(i, j), b = g.index(i, j + 1);
      const double q = (f[b] - f[a]) * ihy;
      sum += face_weight(a, b) * q * q;
    }
  }
  return sum * g.cell_area();
}

CellGradient cell_gradient(const Field& f) {
  const GridSpec& g = f.grid();
  const std::size_t nx = g.nx(), ny = g.ny();
  CellGradient cg{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double q = 0.5 * (f.at(i + 1, j) - f.at(i, j)) * ihx;
      cg.gx[g.index(i, j)] += q;
      cg.gx[g.index(i + 1, j)] += q;
    }
  }
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double q = 0.5 * (f.at(i, j + 1) - f.at(i, j)) * ihy;
      cg.gy[g.index(i, j)] += q;
      cg.gy[g.index(i, j + 1)] += q;
    }
  }
  return cg;
}

}  // namespace alarm_taxis
