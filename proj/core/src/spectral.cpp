#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "mixbec/grid.hpp"

namespace mixbec {
namespace {

// FFTW's planner is not reentrant; execution of an existing plan on new arrays
// is. Plans are created once per (dim, M, sign) and live for the process.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const Grid& grid, int sign) {
    const auto key = std::make_tuple(grid.dim(), grid.points(), sign);
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::vector<int> n(grid.dim(), grid.points());
    std::vector<fftw_complex> in(grid.size()), out(grid.size());
    fftw_plan plan = fftw_plan_dft(grid.dim(), n.data(), in.data(), out.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void execute(const Grid& grid, int sign, std::span<const complex> in, std::span<complex> out) {
  if (in.size() != grid.size() || out.size() != grid.size()) {
    throw std::invalid_argument("spectral transform: buffer size does not match grid");
  }
  fftw_plan plan = PlanCache::instance().get(grid, sign);
  // Plans are out-of-place; aliasing buffers go through a copy.
  if (in.data() == out.data()) {
    std::vector<complex> tmp(in.begin(), in.end());
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return;
  }
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void require_finite(const Field& f, const char* where) {
  for (const auto& z : f.values) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw std::invalid_argument(std::string(where) + ": non-finite input");
    }
  }
}

std::vector<double> axis_sum(const Grid& grid, const std::vector<double>& per_axis) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unravel(i);
    double s = 0.0;
    for (int d = 0; d < grid.dim(); ++d) s += per_axis[idx[d]];
    out[i] = s;
  }
  return out;
}

}  // namespace

void forward_transform(const Grid& grid, std::span<const complex> in, std::span<complex> out) {
  execute(grid, FFTW_FORWARD, in, out);
}

void inverse_transform(const Grid& grid, std::span<const complex> in, std::span<complex> out) {
  execute(grid, FFTW_BACKWARD, in, out);
}

std::vector<double> laplacian_symbol(const Grid& grid) {
  std::vector<double> k2(grid.points());
  for (int j = 0; j < grid.points(); ++j) k2[j] = grid.wavenumbers()[j] * grid.wavenumbers()[j];
  return axis_sum(grid, k2);
}

std::vector<double> stencil_symbol(const Grid& grid) {
  const double h = grid.spacing();
  std::vector<double> s(grid.points());
  for (int j = 0; j < grid.points(); ++j) {
    const double half = std::sin(0.5 * grid.wavenumbers()[j] * h);
    s[j] = 4.0 * half * half / (h * h);
  }
  return axis_sum(grid, s);
}

Field apply_laplacian(const Field& f) {
  require_finite(f, "apply_laplacian");
  const auto symbol = laplacian_symbol(f.grid);
  Field out(f.grid);
  forward_transform(f.grid, f.values, out.values);
  const double scale = 1.0 / static_cast<double>(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] *= symbol[i] * scale;
  inverse_transform(f.grid, out.values, out.values);
  return out;
}

Field apply_stencil_laplacian(const Field& f) {
  require_finite(f, "apply_stencil_laplacian");
  const Grid& g = f.grid;
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const int m = g.points();
  Field out(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto idx = g.unravel(i);
    complex acc = 2.0 * g.dim() * f[i];
    for (int d = 0; d < g.dim(); ++d) {
      auto up = idx;
      auto down = idx;
      up[d] = (idx[d] + 1) % m;
      down[d] = (idx[d] + m - 1) % m;
      acc -= f[g.ravel(up)] + f[g.ravel(down)];
    }
    out[i] = acc * inv_h2;
  }
  return out;
}

std::vector<complex> convolution_kernel(const RealField& potential) {
  const Grid& g = potential.grid;
  std::vector<complex> v(potential.values.begin(), potential.values.end());
  std::vector<complex> vhat(g.size());
  forward_transform(g, v, vhat);
  for (auto& z : vhat) z *= g.cell_volume();
  return vhat;
}

RealField periodic_convolve(const RealField& potential, const RealField& rho) {
  if (!(potential.grid == rho.grid)) throw std::invalid_argument("periodic_convolve: grid mismatch");
  const Grid& g = rho.grid;
  const auto vhat = convolution_kernel(potential);
  std::vector<complex> r(rho.values.begin(), rho.values.end());
  std::vector<complex> rhat(g.size());
  forward_transform(g, r, rhat);
  for (std::size_t i = 0; i < g.size(); ++i) rhat[i] *= vhat[i];
  inverse_transform(g, rhat, r);
  RealField out(g);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = r[i].real() * scale;
  return out;
}

}  // namespace mixbec
