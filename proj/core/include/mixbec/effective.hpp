#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixbec/grid.hpp"

namespace mixbec {

enum class CouplingMode { hartree, gross_pitaevskii, rabi, spin1 };
enum class KineticMode { spectral, stencil };

std::string to_string(CouplingMode mode);
std::string to_string(KineticMode mode);

/// Condensate wave-functions: (u, v) for mixtures and Rabi systems, (u, v, w)
/// for the spin-1 system.
struct OrbitalState {
  std::vector<Field> components;
  double time = 0.0;
};

/// Parameters of one effective system.
///
/// hartree:           i u' = -Lap u + (V1 * |u|^2) u + c2 (V12 * |v|^2) u, and symmetrically for v.
/// gross_pitaevskii:  i u' = -Lap u + 8 pi a1 |u|^2 u + c2 8 pi a12 |v|^2 u, and symmetrically.
/// rabi:              i u' = -Lap u + 8 pi a (|u|^2 + |v|^2) u + B(t) v, and symmetrically.
/// spin1:             three components with the spin-exchange nonlinearity of strength 8 pi a.
///
/// Hartree potentials are displacement-indexed (see sample_displacement).
struct CouplingSpec {
  CouplingMode mode = CouplingMode::hartree;
  KineticMode kinetic = KineticMode::spectral;

  double c1 = 0.5;
  double c2 = 0.5;

  std::optional<RealField> V1;
  std::optional<RealField> V2;
  std::optional<RealField> V12;

  double a1 = 0.0;
  double a2 = 0.0;
  double a12 = 0.0;

  double a = 0.0;
  std::function<double(double)> B;

  /// Number of components the mode evolves (2 or 3).
  int components() const noexcept { return mode == CouplingMode::spin1 ? 3 : 2; }
};

CouplingSpec hartree_spec(RealField V1, RealField V2, RealField V12, double c1);
CouplingSpec gp_spec(double a1, double a2, double a12, double c1);
CouplingSpec rabi_spec(double a, std::function<double(double)> B);
CouplingSpec spin1_spec(double a);

/// Strang split-step integrator bound to one (grid, spec) pair. Reusing an
/// instance across steps avoids recomputing potential transforms.
class SplitStepIntegrator {
 public:
  SplitStepIntegrator(const Grid& grid, CouplingSpec spec);

  /// Advances by dt (negative dt integrates backwards). Throws NumericalError
  /// on non-finite output and std::invalid_argument on a component mismatch.
  OrbitalState step(const OrbitalState& state, double dt) const;

  const CouplingSpec& spec() const noexcept { return spec_; }
  const Grid& grid() const noexcept { return grid_; }

 private:
  void potential_substep(std::vector<Field>& comps, double t0, double tau) const;
  void kinetic_substep(std::vector<Field>& comps, double dt) const;
  void spin_exchange_substep(std::vector<Field>& comps, double tau) const;
  RealField convolve(const std::vector<complex>& kernel, const RealField& rho) const;

  Grid grid_;
  CouplingSpec spec_;
  std::vector<double> kinetic_symbol_;
  std::vector<complex> kernel_v1_, kernel_v2_, kernel_v12_;
};

OrbitalState step(const OrbitalState& state, const CouplingSpec& spec, double dt);

struct Trajectory {
  std::vector<double> times;
  std::vector<OrbitalState> states;
  /// masses[i][c] is the mass of component c at sample i.
  std::vector<std::vector<double>> masses;
  std::vector<double> energy;
  /// Populated in spin1 mode only.
  std::vector<double> magnetization;
};

/// Repeated steps of size dt up to round(T/dt) steps, sampling every
/// `sample_every` steps (the initial and final states are always sampled).
Trajectory evolve(const OrbitalState& state, const CouplingSpec& spec, double T, double dt,
                  int sample_every);

/// CSV with columns t, mass_1, mass_2[, mass_3], energy[, magnetization].
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

// ---------------------------------------------------------------------------
// Functionals

/// <f, -Lap f> with the kinetic operator selected by the spec.
double kinetic_energy(const Field& f, KineticMode mode);

/// Gross-Pitaevskii energy <u,-Lap u> + <v,-Lap v> + 4 pi a1 <u,|u|^2 u>
/// + 4 pi a2 <v,|v|^2 v> + 8 pi a12 <u,|v|^2 u>.
double gp_energy(const OrbitalState& state, const CouplingSpec& spec);

/// Per-particle mean-field energy conserved by the Hartree system:
/// c1 [K(u) + 1/2 <|u|^2, V1*|u|^2>] + c2 [K(v) + 1/2 <|v|^2, V2*|v|^2>]
/// + c1 c2 <|u|^2, V12*|v|^2>.
double hartree_energy(const OrbitalState& state, const CouplingSpec& spec);

/// Per-particle energy conserved by the GP system (population-weighted form
/// of gp_energy).
double gp_mixture_energy(const OrbitalState& state, const CouplingSpec& spec);

/// Energy functional conserved by the flow of the spec's mode (for rabi mode
/// only when B is constant).
double conserved_energy(const OrbitalState& state, const CouplingSpec& spec);

std::vector<double> component_masses(const OrbitalState& state);
/// Integral of |u|^2 - |w|^2 (spin1 states).
double magnetization(const OrbitalState& state);

}  // namespace mixbec
