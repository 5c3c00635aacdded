#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mixbec/effective.hpp"
#include "mixbec/manybody.hpp"
#include "mixbec/scattering.hpp"

namespace mixbec {

/// Named pair-potential profile: `kind amplitude width`.
///
/// zero, gaussian A exp(-(r/w)^2), lorentzian A / (1 + (r/w)^2),
/// barrier A on r < w.
struct PotentialShape {
  std::string kind = "zero";
  double amplitude = 0.0;
  double width = 1.0;

  double operator()(double r) const;
  std::function<double(double)> function() const;
  std::string describe() const;
};

/// Normalized Gaussian orbital `center width momentum` (axis 0 carries the
/// offset and the momentum).
struct OrbitalShape {
  double center = 0.0;
  double width = 1.0;
  double momentum = 0.0;

  Field sample(const Grid& grid) const;
  std::string describe() const;
};

struct LadderEntry {
  int n1 = 1;
  int n2 = 1;
};

struct ScatteringConfig {
  PotentialShape potential{"barrier", 2.0, 1.0};
  double beta = 1.0;
  std::vector<double> particles{32.0};
  /// Integration radius in units of the support radius.
  double r_max = 4.0;
  int samples = 2000;
  bool calibrate = true;
  double max_shell_ratio = 10.0;
};

struct ExperimentConfig {
  // [grid]
  int dim = 1;
  int points = 10;
  double length = 8.0;

  // [system]
  Scaling scaling = Scaling::mean_field;
  double beta = 0.5;
  PotentialShape V1;
  PotentialShape V2;
  PotentialShape V12;
  OrbitalShape u0{-0.5, 1.0, 0.0};
  OrbitalShape v0{0.5, 1.0, 0.0};
  OrbitalShape w0{0.0, 1.0, 0.0};
  CouplingMode effective = CouplingMode::hartree;
  KineticMode kinetic = KineticMode::spectral;
  double c1 = 0.5;
  double a1 = 0.0;
  double a2 = 0.0;
  double a12 = 0.0;
  double a = 0.0;
  double rabi_B = 1.0;
  /// Population fractions of the spin-1 components.
  std::vector<double> spin_fractions{0.3, 0.5, 0.2};
  std::uint64_t seed = 0;

  // [ladder]
  std::vector<LadderEntry> ladder;
  bool ratio_fixed = false;
  std::size_t dimension_cap = kDefaultDimensionCap;

  // [time]
  double T = 0.5;
  double dt = 1e-3;
  int sample_every = 50;
  int krylov_dimension = 30;
  double krylov_tolerance = 1e-12;

  // [indicators]
  double xi = 0.2;
  double probe_time = 0.5;
  bool derivative = true;

  // [output]
  std::string out_dir = "out";
  std::string prefix = "entry";

  // [scattering]
  ScatteringConfig scattering;

  /// The document the config was parsed from.
  std::string source;
};

/// INI document with sections [grid] [system] [ladder] [time] [indicators]
/// [output] [scattering]. Throws ConfigError naming `section.key` on unknown
/// keys, malformed values and invariant violations.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// ---------------------------------------------------------------------------
// Convergence sweeps

/// One sampled row of indicator values.
struct IndicatorSample {
  double t = 0.0;
  double alpha_11 = 0.0;
  double trace_dist = 0.0;
  double alpha_10 = 0.0;
  double alpha_01 = 0.0;
  double c_v1_im = 0.0;
  double c_v2_im = 0.0;
  double c_v12_im = 0.0;
  double weight_s = 0.0;
  double weight_n = 0.0;
  double weight_m = 0.0;
};

struct EntryReport {
  LadderEntry entry;
  std::size_t dimension = 0;
  bool ok = true;
  std::string message;
  std::vector<IndicatorSample> samples;
  /// alpha_11 at the sample closest to the probe time.
  double alpha_probe = 0.0;
  double probe_time = 0.0;
  /// Per-particle energies at t = 0.
  double manybody_energy = 0.0;
  double effective_energy = 0.0;

  double energy_gap() const { return std::abs(manybody_energy - effective_energy); }
};

struct SweepReport {
  std::vector<EntryReport> entries;
  /// Least-squares slope of log alpha(t*) against log(N1 + N2); NaN unless at
  /// least three entries succeeded with positive alpha(t*).
  double fit_exponent = 0.0;
  std::uint64_t seed = 0;
};

/// Co-evolves the many-body state and the effective orbitals (stencil
/// kinetic mode) for every ladder entry. Entries run on `threads` workers; a
/// failing entry yields a diagnostic report instead of aborting the sweep.
SweepReport run_convergence_sweep(const ExperimentConfig& config, int threads = 1);

/// Single ladder entry of a sweep.
EntryReport run_entry(const ExperimentConfig& config, const LadderEntry& entry);

/// Hamiltonian and effective coupling used for one ladder entry.
HamiltonianSpec manybody_spec(const ExperimentConfig& config, const LadderEntry& entry);
CouplingSpec sweep_coupling(const ExperimentConfig& config, const Grid& grid, const LadderEntry& entry);

/// Writes <prefix>_<N1>_<N2>.csv per entry, summary.csv and manifest.json into
/// `dir` (created if missing). Returns the paths written.
std::vector<std::string> emit_report(const SweepReport& report, const ExperimentConfig& config,
                                     const std::string& dir);

extern const char* const kVersion;

// ---------------------------------------------------------------------------
// Other subcommands

/// Evolves (u0, v0[, w0]) with the configured effective mode and writes
/// trajectory.csv.
Trajectory run_effective(const ExperimentConfig& config);

struct ScatteringRow {
  double particles = 0.0;
  double scattering_length = 0.0;
  double shell_ratio = 0.0;
  double residual = 0.0;
  bool monotone_bracket = true;
  GNorms norms;
  std::string message;
};

/// Scattering length of the configured potential, then per N the scaled
/// length and (optionally) the calibrated shell.
std::vector<ScatteringRow> run_scattering(const ExperimentConfig& config, ScatteringResult* unscaled = nullptr);

/// Columns N, scattering_length, shell_ratio, residual, monotone_bracket,
/// g_l1, g_l2, g_linf, message.
void write_scattering_csv(const std::string& path, const std::vector<ScatteringRow>& rows);
/// Columns r, f, g.
void write_profile_csv(const std::string& path, const ScatteringResult& result);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Structural invariants on random data drawn from `seed`.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

}  // namespace mixbec
