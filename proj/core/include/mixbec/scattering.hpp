#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mixbec {

/// Spherically symmetric, compactly supported potential. `breakpoints` lists
/// radii where the profile may be discontinuous; the radial integrator never
/// steps across them.
struct RadialPotential {
  std::function<double(double)> profile;
  double support_radius = 0.0;
  std::vector<double> breakpoints;
  bool positive = true;

  double operator()(double r) const { return r > support_radius ? 0.0 : profile(r); }

  static RadialPotential zero();
  /// V0 on r < R.
  static RadialPotential square_barrier(double height, double radius);
};

/// lambda * V(mu r): support shrinks by mu, breakpoints follow.
RadialPotential rescale(const RadialPotential& V, double amplitude, double length_factor);

/// The beta-family scaling N^{3 beta - 1} V(N^beta r); beta = 1 gives the
/// Gross-Pitaevskii scaling N^2 V(N r).
RadialPotential scale_potential(const RadialPotential& V, double N, double beta);

enum class PairSpecies { one, two, cross };

/// Auxiliary shell potential: `amplitude` on inner_radius < r < outer_radius.
struct BoxPotentialSpec {
  double amplitude = 0.0;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  PairSpecies species = PairSpecies::one;
  double beta = 1.0;
  /// N_j for species one/two, N_1 + N_2 for the cross term.
  double particles = 2.0;
  /// Scattering length of the unscaled potential the amplitude derives from.
  double scattering_length = 0.0;

  /// outer_radius / inner_radius.
  double shell_ratio() const { return outer_radius / inner_radius; }
};

/// Shell template with amplitude 4 pi a N^{3 beta - 1} on
/// N^{-beta} < r < C N^{-beta}.
BoxPotentialSpec box_template(double scattering_length, double beta, double particles,
                              PairSpecies species, double shell_ratio = 1.0);

/// V - W as a (sign-indefinite) radial potential.
RadialPotential subtract_shell(const RadialPotential& V, const BoxPotentialSpec& W);

struct ScatteringOptions {
  /// Radial samples per support radius for the stored profile.
  int samples_per_support = 2000;
  double rel_tol = 1e-13;
  double abs_tol = 1e-15;
  /// Zero crossings of u = r f are tolerated only inside this interval
  /// (used for the shell-modified problem).
  std::optional<std::pair<double, double>> crossing_window;
};

struct ScatteringResult {
  double scattering_length = 0.0;
  /// Exterior slope of u = r f before normalization.
  double exterior_slope = 0.0;
  double support_radius = 0.0;
  std::vector<double> radii;
  std::vector<double> f;
  std::vector<double> g;
};

/// Solves u'' = V u / 2, u(0) = 0, u'(0) = 1 outward and reads the
/// scattering length off the exterior line u = kappa (r - a) sampled at 1.5 R
/// and 2 R. The profile f = u / (kappa r) is sampled on [0, r_max].
///
/// Throws std::invalid_argument if r_max <= 2 R and ScatteringError if u
/// crosses zero outside the permitted window or the exterior slope is not
/// positive.
ScatteringResult scattering_length(const RadialPotential& V, double r_max, const ScatteringOptions& options = {});

struct CalibrationOptions {
  double max_shell_ratio = 10.0;
  int scan_points = 400;
};

struct Calibration {
  BoxPotentialSpec shell;
  double residual = 0.0;
  /// Whether the scanned residual decreased strictly up to the bracket.
  bool monotone_bracket = true;
  ScatteringResult modified;
};

/// Finds the smallest shell ratio C > 1 for which V_scaled - W has zero
/// scattering length. Throws ScatteringError with the scanned bracket values
/// when no sign change is found on (1, max_shell_ratio].
Calibration calibrate_W(const RadialPotential& V_scaled, const BoxPotentialSpec& shell_template,
                        const CalibrationOptions& options = {});

struct GNorms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Norms of g = 1 - f over the ball r <= r_max in R^3 (4 pi r^2 dr measure).
GNorms g_norms(const ScatteringResult& result);

}  // namespace mixbec
