#include "mixbec/effective.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "csv.hpp"
#include "mixbec/error.hpp"

namespace mixbec {
namespace {

constexpr double kPi = std::numbers::pi;

void check_fractions(const CouplingSpec& spec) {
  if (!(spec.c1 > 0.0 && spec.c1 < 1.0 && spec.c2 > 0.0 && spec.c2 < 1.0) ||
      std::abs(spec.c1 + spec.c2 - 1.0) > 1e-12) {
    throw std::invalid_argument("population fractions must satisfy c1 + c2 = 1 with c1, c2 in (0, 1)");
  }
}

void check_potential(const std::optional<RealField>& v, const Grid& grid, const char* name) {
  if (v && !(v->grid == grid)) throw std::invalid_argument(std::string(name) + ": grid mismatch");
}

void check_finite(const std::vector<Field>& comps) {
  for (const auto& f : comps) {
    for (const auto& z : f.values) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw NumericalError("split-step integrator produced non-finite values");
      }
    }
  }
}

double weighted_overlap(const RealField& a, const RealField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid.cell_volume();
}

void require_components(const OrbitalState& state, int expected, const char* where) {
  if (static_cast<int>(state.components.size()) != expected) {
    throw std::invalid_argument(std::string(where) + ": expected " + std::to_string(expected) +
                                " components, got " + std::to_string(state.components.size()));
  }
}

}  // namespace

std::string to_string(CouplingMode mode) {
  switch (mode) {
    case CouplingMode::hartree: return "hartree";
    case CouplingMode::gross_pitaevskii: return "gp";
    case CouplingMode::rabi: return "rabi";
    case CouplingMode::spin1: return "spin1";
  }
  return "unknown";
}

std::string to_string(KineticMode mode) {
  return mode == KineticMode::spectral ? "spectral" : "stencil";
}

CouplingSpec hartree_spec(RealField V1, RealField V2, RealField V12, double c1) {
  CouplingSpec spec;
  spec.mode = CouplingMode::hartree;
  spec.c1 = c1;
  spec.c2 = 1.0 - c1;
  spec.V1 = std::move(V1);
  spec.V2 = std::move(V2);
  spec.V12 = std::move(V12);
  return spec;
}

CouplingSpec gp_spec(double a1, double a2, double a12, double c1) {
  CouplingSpec spec;
  spec.mode = CouplingMode::gross_pitaevskii;
  spec.a1 = a1;
  spec.a2 = a2;
  spec.a12 = a12;
  spec.c1 = c1;
  spec.c2 = 1.0 - c1;
  return spec;
}

CouplingSpec rabi_spec(double a, std::function<double(double)> B) {
  CouplingSpec spec;
  spec.mode = CouplingMode::rabi;
  spec.a = a;
  spec.B = std::move(B);
  return spec;
}

CouplingSpec spin1_spec(double a) {
  CouplingSpec spec;
  spec.mode = CouplingMode::spin1;
  spec.a = a;
  return spec;
}

// ---------------------------------------------------------------------------

SplitStepIntegrator::SplitStepIntegrator(const Grid& grid, CouplingSpec spec)
    : grid_(grid), spec_(std::move(spec)) {
  switch (spec_.mode) {
    case CouplingMode::hartree:
      check_fractions(spec_);
      check_potential(spec_.V1, grid_, "V1");
      check_potential(spec_.V2, grid_, "V2");
      check_potential(spec_.V12, grid_, "V12");
      if (spec_.V1) kernel_v1_ = convolution_kernel(*spec_.V1);
      if (spec_.V2) kernel_v2_ = convolution_kernel(*spec_.V2);
      if (spec_.V12) kernel_v12_ = convolution_kernel(*spec_.V12);
      break;
    case CouplingMode::gross_pitaevskii:
      check_fractions(spec_);
      if (!std::isfinite(spec_.a1) || !std::isfinite(spec_.a2) || !std::isfinite(spec_.a12)) {
        throw std::invalid_argument("scattering lengths must be finite");
      }
      break;
    case CouplingMode::rabi:
      if (!spec_.B) spec_.B = [](double) { return 0.0; };
      break;
    case CouplingMode::spin1:
      break;
  }
  kinetic_symbol_ =
      spec_.kinetic == KineticMode::spectral ? laplacian_symbol(grid_) : stencil_symbol(grid_);
}

RealField SplitStepIntegrator::convolve(const std::vector<complex>& kernel, const RealField& rho) const {
  RealField out(grid_);
  if (kernel.empty()) return out;
  std::vector<complex> r(rho.values.begin(), rho.values.end());
  std::vector<complex> rhat(grid_.size());
  forward_transform(grid_, r, rhat);
  for (std::size_t i = 0; i < rhat.size(); ++i) rhat[i] *= kernel[i];
  inverse_transform(grid_, rhat, r);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i].real() * scale;
  return out;
}

void SplitStepIntegrator::kinetic_substep(std::vector<Field>& comps, double dt) const {
  std::vector<complex> hat(grid_.size());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (auto& f : comps) {
    forward_transform(grid_, f.values, hat);
    for (std::size_t i = 0; i < hat.size(); ++i) {
      hat[i] *= std::polar(scale, -kinetic_symbol_[i] * dt);
    }
    inverse_transform(grid_, hat, f.values);
  }
}

// Implicit midpoint on the local spin-exchange ODE. Quadratic pointwise
// invariants (total density, |u|^2 - |w|^2) are preserved exactly by the
// scheme, up to the fixed-point tolerance.
void SplitStepIntegrator::spin_exchange_substep(std::vector<Field>& comps, double tau) const {
  const double g = 8.0 * kPi * spec_.a;
  const complex minus_i{0.0, -1.0};
  auto rhs = [&](complex u, complex v, complex w, complex out[3]) {
    const double nu = std::norm(u), nv = std::norm(v), nw = std::norm(w);
    out[0] = minus_i * g * (nv * u + std::conj(w) * v * v + nu * u - nw * u);
    out[1] = minus_i * g * (nu * v + 2.0 * std::conj(v) * w * u + nw * v);
    out[2] = minus_i * g * (nv * w + std::conj(u) * v * v - nu * w + nw * w);
  };
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const complex y0[3] = {comps[0][i], comps[1][i], comps[2][i]};
    complex mid[3] = {y0[0], y0[1], y0[2]};
    bool converged = false;
    double change = 0.0;
    double scale = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      complex f[3];
      rhs(mid[0], mid[1], mid[2], f);
      change = 0.0;
      scale = 1.0;
      for (int c = 0; c < 3; ++c) {
        const complex next = y0[c] + 0.5 * tau * f[c];
        change = std::max(change, std::abs(next - mid[c]));
        scale = std::max(scale, std::abs(next));
        mid[c] = next;
      }
      if (change <= 2e-15 * scale) {
        converged = true;
        break;
      }
    }
    // Round-off can stall the iteration just above the strict threshold.
    if (!converged && change > 1e-12 * scale) {
      throw NumericalError("spin-exchange substep: implicit midpoint did not converge");
    }
    for (int c = 0; c < 3; ++c) comps[c][i] = 2.0 * mid[c] - y0[c];
  }
}

void SplitStepIntegrator::potential_substep(std::vector<Field>& comps, double t0, double tau) const {
  switch (spec_.mode) {
    case CouplingMode::hartree: {
      const RealField rho_u = density(comps[0]);
      const RealField rho_v = density(comps[1]);
      const RealField v1u = convolve(kernel_v1_, rho_u);
      const RealField v2v = convolve(kernel_v2_, rho_v);
      const RealField v12u = convolve(kernel_v12_, rho_u);
      const RealField v12v = convolve(kernel_v12_, rho_v);
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double phi_u = v1u[i] + spec_.c2 * v12v[i];
        const double phi_v = v2v[i] + spec_.c1 * v12u[i];
        comps[0][i] *= std::polar(1.0, -phi_u * tau);
        comps[1][i] *= std::polar(1.0, -phi_v * tau);
      }
      break;
    }
    case CouplingMode::gross_pitaevskii: {
      const double g = 8.0 * kPi;
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double nu = std::norm(comps[0][i]);
        const double nv = std::norm(comps[1][i]);
        const double phi_u = g * (spec_.a1 * nu + spec_.c2 * spec_.a12 * nv);
        const double phi_v = g * (spec_.a2 * nv + spec_.c1 * spec_.a12 * nu);
        comps[0][i] *= std::polar(1.0, -phi_u * tau);
        comps[1][i] *= std::polar(1.0, -phi_v * tau);
      }
      break;
    }
    case CouplingMode::rabi: {
      // The Rabi rotation preserves |u|^2 + |v|^2 pointwise and commutes with
      // the common density phase, so the substep is exact up to the midpoint
      // rule for the integral of B.
      const double theta = spec_.B(t0 + 0.5 * tau) * tau;
      const double c = std::cos(theta);
      const complex s{0.0, -std::sin(theta)};
      const double g = 8.0 * kPi * spec_.a;
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        const complex u = comps[0][i];
        const complex v = comps[1][i];
        const complex phase = std::polar(1.0, -g * (std::norm(u) + std::norm(v)) * tau);
        comps[0][i] = phase * (c * u + s * v);
        comps[1][i] = phase * (s * u + c * v);
      }
      break;
    }
    case CouplingMode::spin1:
      spin_exchange_substep(comps, tau);
      break;
  }
}

OrbitalState SplitStepIntegrator::step(const OrbitalState& state, double dt) const {
  require_components(state, spec_.components(), "step");
  for (const auto& f : state.components) {
    if (!(f.grid == grid_)) throw std::invalid_argument("step: component grid mismatch");
  }
  if (!std::isfinite(dt) || dt == 0.0) throw std::invalid_argument("step: dt must be finite and nonzero");

  OrbitalState next = state;
  const double half = 0.5 * dt;
  potential_substep(next.components, state.time, half);
  kinetic_substep(next.components, dt);
  potential_substep(next.components, state.time + half, half);
  check_finite(next.components);
  next.time = state.time + dt;
  return next;
}

OrbitalState step(const OrbitalState& state, const CouplingSpec& spec, double dt) {
  if (state.components.empty()) throw std::invalid_argument("step: empty state");
  return SplitStepIntegrator(state.components.front().grid, spec).step(state, dt);
}

// ---------------------------------------------------------------------------

double kinetic_energy(const Field& f, KineticMode mode) {
  const Grid& g = f.grid;
  const auto symbol = mode == KineticMode::spectral ? laplacian_symbol(g) : stencil_symbol(g);
  std::vector<complex> hat(g.size());
  forward_transform(g, f.values, hat);
  double s = 0.0;
  for (std::size_t i = 0; i < hat.size(); ++i) s += symbol[i] * std::norm(hat[i]);
  return s * g.cell_volume() / static_cast<double>(g.size());
}

std::vector<double> component_masses(const OrbitalState& state) {
  std::vector<double> m;
  m.reserve(state.components.size());
  for (const auto& f : state.components) m.push_back(mass(f));
  return m;
}

double magnetization(const OrbitalState& state) {
  require_components(state, 3, "magnetization");
  return mass(state.components[0]) - mass(state.components[2]);
}

double gp_energy(const OrbitalState& state, const CouplingSpec& spec) {
  if (spec.mode != CouplingMode::gross_pitaevskii) throw std::invalid_argument("gp_energy: spec is not in gp mode");
  require_components(state, 2, "gp_energy");
  const Field& u = state.components[0];
  const Field& v = state.components[1];
  const RealField nu = density(u), nv = density(v);
  return kinetic_energy(u, spec.kinetic) + kinetic_energy(v, spec.kinetic) +
         4.0 * kPi * spec.a1 * weighted_overlap(nu, nu) + 4.0 * kPi * spec.a2 * weighted_overlap(nv, nv) +
         8.0 * kPi * spec.a12 * weighted_overlap(nu, nv);
}

double gp_mixture_energy(const OrbitalState& state, const CouplingSpec& spec) {
  if (spec.mode != CouplingMode::gross_pitaevskii) {
    throw std::invalid_argument("gp_mixture_energy: spec is not in gp mode");
  }
  require_components(state, 2, "gp_mixture_energy");
  const Field& u = state.components[0];
  const Field& v = state.components[1];
  const RealField nu = density(u), nv = density(v);
  return spec.c1 * (kinetic_energy(u, spec.kinetic) + 4.0 * kPi * spec.a1 * weighted_overlap(nu, nu)) +
         spec.c2 * (kinetic_energy(v, spec.kinetic) + 4.0 * kPi * spec.a2 * weighted_overlap(nv, nv)) +
         spec.c1 * spec.c2 * 8.0 * kPi * spec.a12 * weighted_overlap(nu, nv);
}

double hartree_energy(const OrbitalState& state, const CouplingSpec& spec) {
  if (spec.mode != CouplingMode::hartree) throw std::invalid_argument("hartree_energy: spec is not in hartree mode");
  require_components(state, 2, "hartree_energy");
  const Field& u = state.components[0];
  const Field& v = state.components[1];
  const RealField nu = density(u), nv = density(v);
  auto pair = [](const std::optional<RealField>& V, const RealField& a, const RealField& b) {
    return V ? weighted_overlap(a, periodic_convolve(*V, b)) : 0.0;
  };
  return spec.c1 * (kinetic_energy(u, spec.kinetic) + 0.5 * pair(spec.V1, nu, nu)) +
         spec.c2 * (kinetic_energy(v, spec.kinetic) + 0.5 * pair(spec.V2, nv, nv)) +
         spec.c1 * spec.c2 * pair(spec.V12, nu, nv);
}

namespace {

double rabi_energy(const OrbitalState& state, const CouplingSpec& spec) {
  require_components(state, 2, "rabi energy");
  const Field& u = state.components[0];
  const Field& v = state.components[1];
  RealField n = density(u);
  const RealField nv = density(v);
  for (std::size_t i = 0; i < n.size(); ++i) n[i] += nv[i];
  const double b = spec.B ? spec.B(state.time) : 0.0;
  return kinetic_energy(u, spec.kinetic) + kinetic_energy(v, spec.kinetic) +
         4.0 * kPi * spec.a * weighted_overlap(n, n) + 2.0 * b * inner_product(u, v).real();
}

double spin1_energy(const OrbitalState& state, const CouplingSpec& spec) {
  require_components(state, 3, "spin1 energy");
  const Field& u = state.components[0];
  const Field& v = state.components[1];
  const Field& w = state.components[2];
  double interaction = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double nu = std::norm(u[i]), nv = std::norm(v[i]), nw = std::norm(w[i]);
    interaction += 0.5 * nu * nu + 0.5 * nw * nw + nu * nv + nv * nw - nu * nw +
                   2.0 * (std::conj(u[i]) * std::conj(w[i]) * v[i] * v[i]).real();
  }
  interaction *= u.grid.cell_volume();
  return kinetic_energy(u, spec.kinetic) + kinetic_energy(v, spec.kinetic) +
         kinetic_energy(w, spec.kinetic) + 8.0 * kPi * spec.a * interaction;
}

}  // namespace

double conserved_energy(const OrbitalState& state, const CouplingSpec& spec) {
  switch (spec.mode) {
    case CouplingMode::hartree: return hartree_energy(state, spec);
    case CouplingMode::gross_pitaevskii: return gp_mixture_energy(state, spec);
    case CouplingMode::rabi: return rabi_energy(state, spec);
    case CouplingMode::spin1: return spin1_energy(state, spec);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

Trajectory evolve(const OrbitalState& state, const CouplingSpec& spec, double T, double dt,
                  int sample_every) {
  if (!(T > 0.0) || !(dt > 0.0) || dt > T) throw std::invalid_argument("evolve: need T > 0 and 0 < dt <= T");
  if (sample_every < 1) throw std::invalid_argument("evolve: sample_every must be >= 1");
  if (state.components.empty()) throw std::invalid_argument("evolve: empty state");

  const SplitStepIntegrator integrator(state.components.front().grid, spec);
  const long steps = std::max(1L, std::lround(T / dt));

  Trajectory traj;
  auto record = [&](const OrbitalState& s) {
    traj.times.push_back(s.time);
    traj.states.push_back(s);
    traj.masses.push_back(component_masses(s));
    traj.energy.push_back(conserved_energy(s, spec));
    if (spec.mode == CouplingMode::spin1) traj.magnetization.push_back(magnetization(s));
  };

  OrbitalState current = state;
  record(current);
  for (long n = 1; n <= steps; ++n) {
    current = integrator.step(current, dt);
    if (n % sample_every == 0 || n == steps) record(current);
  }
  return traj;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  detail::CsvWriter csv(path);
  const std::size_t ncomp = traj.masses.empty() ? 0 : traj.masses.front().size();
  std::vector<std::string> names{"t"};
  for (std::size_t c = 0; c < ncomp; ++c) names.push_back("mass_" + std::to_string(c + 1));
  names.push_back("energy");
  if (!traj.magnetization.empty()) names.push_back("magnetization");
  csv.header(names);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i]};
    row.insert(row.end(), traj.masses[i].begin(), traj.masses[i].end());
    row.push_back(traj.energy[i]);
    if (!traj.magnetization.empty()) row.push_back(traj.magnetization[i]);
    csv.row(row);
  }
}

}  // namespace mixbec
