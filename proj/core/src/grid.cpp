#include "mixbec/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mixbec {

namespace {

void check_points(const char* who, int points, int minimum) {
  if (points < minimum) {
    throw std::invalid_argument(std::string(who) + ": need at least " + std::to_string(minimum) +
                                " points per axis (got " + std::to_string(points) + ")");
  }
}

}  // namespace

Grid make_lattice(int points, double length) {
  check_points("make_lattice", points, 2);
  return detail::build_grid(1, points, length);
}

Grid make_grid(int dim, int points, double length) {
  if (dim < 1 || dim > 3) {
    throw std::invalid_argument("make_grid: dim must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
  }
  check_points("make_grid", points, 4);
  return detail::build_grid(dim, points, length);
}

Grid detail::build_grid(int dim, int points, double length) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw std::invalid_argument("make_grid: box length must be positive and finite");
  }

  Grid g;
  g.dim_ = dim;
  g.points_ = points;
  g.length_ = length;
  g.spacing_ = length / points;
  g.cell_volume_ = std::pow(g.spacing_, dim);
  g.size_ = 1;
  for (int d = 0; d < dim; ++d) g.size_ *= static_cast<std::size_t>(points);

  g.wavenumbers_.resize(points);
  const double unit = 2.0 * std::numbers::pi / length;
  for (int j = 0; j < points; ++j) {
    const int signed_index = (2 * j < points) ? j : j - points;
    g.wavenumbers_[j] = unit * signed_index;
  }
  return g;
}

double Grid::displacement(int j) const noexcept {
  const int signed_index = (2 * j < points_) ? j : j - points_;
  return signed_index * spacing_;
}

std::array<int, 3> Grid::unravel(std::size_t flat) const noexcept {
  std::array<int, 3> idx{0, 0, 0};
  const auto m = static_cast<std::size_t>(points_);
  for (int d = dim_ - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % m);
    flat /= m;
  }
  return idx;
}

std::size_t Grid::ravel(const std::array<int, 3>& idx) const noexcept {
  std::size_t flat = 0;
  for (int d = 0; d < dim_; ++d) flat = flat * static_cast<std::size_t>(points_) + idx[d];
  return flat;
}

Field sample_field(const Grid& grid, const std::function<complex(const std::array<double, 3>&)>& f) {
  Field out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unravel(i);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < grid.dim(); ++d) x[d] = grid.position(idx[d]);
    out[i] = f(x);
  }
  return out;
}

RealField sample_displacement(const Grid& grid, const std::function<double(double)>& radial) {
  RealField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unravel(i);
    double r2 = 0.0;
    for (int d = 0; d < grid.dim(); ++d) {
      const double x = grid.displacement(idx[d]);
      r2 += x * x;
    }
    out[i] = radial(std::sqrt(r2));
  }
  return out;
}

complex inner_product(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("inner_product: grid mismatch");
  complex sum{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * b[i];
  return sum * a.grid.cell_volume();
}

double mass(const Field& f) {
  double sum = 0.0;
  for (const auto& z : f.values) sum += std::norm(z);
  return sum * f.grid.cell_volume();
}

double norm(const Field& f) { return std::sqrt(mass(f)); }

RealField density(const Field& f) {
  RealField rho(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) rho[i] = std::norm(f[i]);
  return rho;
}

void normalize(Field& f) {
  const double n = norm(f);
  if (!(n > 0.0)) throw std::invalid_argument("normalize: zero-norm field");
  for (auto& z : f.values) z /= n;
}

}  // namespace mixbec
