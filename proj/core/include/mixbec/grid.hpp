#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mixbec {

using complex = std::complex<double>;

/// Periodic tensor-product grid on [-L/2, L/2)^dim with M points per axis.
///
/// Wavenumbers follow the usual FFT layout: k_j = 2*pi*j/L for j < M/2 and
/// 2*pi*(j - M)/L otherwise, so the Nyquist mode sits on the negative side.
class Grid;

namespace detail {
Grid build_grid(int dim, int points, double length);
}

class Grid {
 public:
  Grid() = default;

  int dim() const noexcept { return dim_; }
  int points() const noexcept { return points_; }
  double length() const noexcept { return length_; }
  double spacing() const noexcept { return spacing_; }
  /// h^dim, the quadrature weight of one grid cell.
  double cell_volume() const noexcept { return cell_volume_; }
  /// Total number of points, M^dim.
  std::size_t size() const noexcept { return size_; }

  const std::vector<double>& wavenumbers() const noexcept { return wavenumbers_; }

  /// Coordinate of index j along an axis: -L/2 + j*h.
  double position(int j) const noexcept { return -0.5 * length_ + j * spacing_; }
  /// Signed periodic displacement represented by index j: j*h for j < M/2,
  /// (j - M)*h otherwise.
  double displacement(int j) const noexcept;

  /// Row-major multi-index of a flat index (axis 0 varies slowest).
  std::array<int, 3> unravel(std::size_t flat) const noexcept;
  std::size_t ravel(const std::array<int, 3>& idx) const noexcept;

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.dim_ == b.dim_ && a.points_ == b.points_ && a.length_ == b.length_;
  }

 private:
  friend Grid detail::build_grid(int dim, int points, double length);

  int dim_ = 0;
  int points_ = 0;
  double length_ = 0.0;
  double spacing_ = 0.0;
  double cell_volume_ = 0.0;
  std::size_t size_ = 0;
  std::vector<double> wavenumbers_;
};

/// Throws std::invalid_argument unless dim in {1,2,3}, M >= 4 and L > 0.
Grid make_grid(int dim, int points, double length);

/// One-dimensional site lattice for many-body work; M >= 2. Spectral
/// operators still require make_grid sizes.
Grid make_lattice(int points, double length);

/// Values sampled on a grid. Complex fields hold wave-functions, real fields
/// hold densities and displacement-indexed pair potentials.
template <class T>
struct BasicField {
  Grid grid;
  std::vector<T> values;

  BasicField() = default;
  explicit BasicField(Grid g) : grid(std::move(g)), values(grid.size()) {}
  BasicField(Grid g, std::vector<T> v) : grid(std::move(g)), values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  T& operator[](std::size_t i) noexcept { return values[i]; }
  const T& operator[](std::size_t i) const noexcept { return values[i]; }
};

using Field = BasicField<complex>;
using RealField = BasicField<double>;

// ---------------------------------------------------------------------------
// Sampling

/// Samples f at the grid positions (unused trailing coordinates are zero).
Field sample_field(const Grid& grid, const std::function<complex(const std::array<double, 3>&)>& f);

/// Samples a radial function at the periodic displacement |d| of every index.
/// The result is even under d -> -d by construction and is the layout
/// expected by periodic_convolve.
RealField sample_displacement(const Grid& grid, const std::function<double(double)>& radial);

// ---------------------------------------------------------------------------
// L^2 geometry (discrete quadrature h^dim * sum)

complex inner_product(const Field& a, const Field& b);
double norm(const Field& f);
/// Discrete L^2 mass h^dim * sum |f|^2.
double mass(const Field& f);
RealField density(const Field& f);
void normalize(Field& f);

// ---------------------------------------------------------------------------
// Spectral primitives

/// Unnormalized forward DFT (FFTW sign convention -1).
void forward_transform(const Grid& grid, std::span<const complex> in, std::span<complex> out);
/// Unnormalized inverse DFT; forward followed by inverse multiplies by size().
void inverse_transform(const Grid& grid, std::span<const complex> in, std::span<complex> out);

/// |k|^2 for every point in transform order.
std::vector<double> laplacian_symbol(const Grid& grid);
/// Symbol of the periodic 3-point stencil, sum_axes (4/h^2) sin^2(k h / 2).
std::vector<double> stencil_symbol(const Grid& grid);

/// Returns -Laplacian(f) via multiplication by |k|^2 in spectral space.
Field apply_laplacian(const Field& f);
/// Returns -Laplacian(f) with the second-order periodic finite-difference stencil.
Field apply_stencil_laplacian(const Field& f);

/// (V * rho)(x) = h^dim sum_y V(x - y) rho(y), with V indexed by displacement.
RealField periodic_convolve(const RealField& potential, const RealField& rho);

/// Spectral transform of a displacement-indexed potential scaled by h^dim, so
/// that convolution becomes inverse(potential_hat * forward(rho)) / size().
std::vector<complex> convolution_kernel(const RealField& potential);

// ---------------------------------------------------------------------------
// Binary field format: structured-text header followed by little-endian
// (re, im) double pairs, row-major over axes.

void write_field(std::ostream& out, const Field& f);
Field read_field(std::istream& in);
void save_field(const std::string& path, const Field& f);
Field load_field(const std::string& path);

}  // namespace mixbec
