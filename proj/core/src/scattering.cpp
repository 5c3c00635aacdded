#include "mixbec/scattering.hpp"

#include <algorithm>
#include <array>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mixbec/error.hpp"

namespace mixbec {
namespace {

namespace odeint = boost::numeric::odeint;
using RadialState = std::array<double, 2>;

constexpr double kPi = std::numbers::pi;
constexpr double kRescaleThreshold = 1e100;

}  // namespace

RadialPotential RadialPotential::zero() {
  RadialPotential V;
  V.profile = [](double) { return 0.0; };
  V.support_radius = 1.0;
  V.positive = true;
  return V;
}

RadialPotential RadialPotential::square_barrier(double height, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("square_barrier: radius must be positive");
  RadialPotential V;
  V.profile = [height](double) { return height; };
  V.support_radius = radius;
  V.breakpoints = {radius};
  V.positive = height >= 0.0;
  return V;
}

RadialPotential rescale(const RadialPotential& V, double amplitude, double length_factor) {
  if (!(length_factor > 0.0)) throw std::invalid_argument("rescale: length factor must be positive");
  RadialPotential out;
  out.profile = [profile = V.profile, amplitude, length_factor](double r) {
    return amplitude * profile(length_factor * r);
  };
  out.support_radius = V.support_radius / length_factor;
  for (double b : V.breakpoints) out.breakpoints.push_back(b / length_factor);
  out.positive = V.positive && amplitude >= 0.0;
  return out;
}

RadialPotential scale_potential(const RadialPotential& V, double N, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("scale_potential: beta must lie in (0, 1]");
  return rescale(V, std::pow(N, 3.0 * beta - 1.0), std::pow(N, beta));
}

BoxPotentialSpec box_template(double scattering_length, double beta, double particles, PairSpecies species,
                              double shell_ratio) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("box_template: beta must lie in (0, 1]");
  if (!(particles >= 2.0)) throw std::invalid_argument("box_template: need at least two particles");
  if (!(shell_ratio >= 1.0)) throw std::invalid_argument("box_template: shell ratio must be >= 1");
  BoxPotentialSpec W;
  W.scattering_length = scattering_length;
  W.beta = beta;
  W.particles = particles;
  W.species = species;
  W.amplitude = 4.0 * kPi * scattering_length * std::pow(particles, 3.0 * beta - 1.0);
  W.inner_radius = std::pow(particles, -beta);
  W.outer_radius = shell_ratio * W.inner_radius;
  return W;
}

RadialPotential subtract_shell(const RadialPotential& V, const BoxPotentialSpec& W) {
  RadialPotential out;
  out.profile = [profile = V.profile, support = V.support_radius, W](double r) {
    double value = r > support ? 0.0 : profile(r);
    if (r > W.inner_radius && r < W.outer_radius) value -= W.amplitude;
    return value;
  };
  out.support_radius = std::max(V.support_radius, W.outer_radius);
  out.breakpoints = V.breakpoints;
  out.breakpoints.push_back(V.support_radius);
  out.breakpoints.push_back(W.inner_radius);
  out.breakpoints.push_back(W.outer_radius);
  out.positive = V.positive && W.amplitude <= 0.0;
  return out;
}

// ---------------------------------------------------------------------------

ScatteringResult scattering_length(const RadialPotential& V, double r_max, const ScatteringOptions& options) {
  const double R = V.support_radius;
  if (!(R > 0.0)) throw std::invalid_argument("scattering_length: support radius must be positive");
  if (!(r_max > 2.0 * R)) throw std::invalid_argument("scattering_length: r_max must exceed twice the support radius");
  if (options.samples_per_support < 1000) {
    throw std::invalid_argument("scattering_length: need at least 1000 samples inside the support");
  }

  // Uniform sample grid on [0, r_max] with an even number of intervals.
  const double target = R / options.samples_per_support;
  long intervals = static_cast<long>(std::ceil(r_max / target));
  if (intervals % 2) ++intervals;
  const double dr = r_max / static_cast<double>(intervals);

  // Segment ends: potential breakpoints, the two exterior probes, and chunks
  // inside the support so overflow rescaling can happen between chunks.
  std::vector<double> ends;
  for (double b : V.breakpoints) {
    if (b > 0.0 && b < r_max) ends.push_back(b);
  }
  constexpr int kChunks = 64;
  for (int c = 1; c <= kChunks; ++c) ends.push_back(R * c / kChunks);
  const double probe1 = 1.5 * R;
  const double probe2 = 2.0 * R;
  ends.push_back(probe1);
  ends.push_back(probe2);
  ends.push_back(r_max);
  std::sort(ends.begin(), ends.end());
  ends.erase(std::unique(ends.begin(), ends.end(), [](double x, double y) { return std::abs(x - y) < 1e-15 * (1.0 + std::abs(x)); }),
             ends.end());

  const auto rhs = [&V](const RadialState& x, RadialState& dxdr, double r) {
    dxdr[0] = x[1];
    dxdr[1] = 0.5 * V(r) * x[0];
  };

  std::vector<double> radii(intervals + 1);
  for (long i = 0; i <= intervals; ++i) radii[i] = dr * static_cast<double>(i);
  radii.back() = r_max;
  std::vector<double> u(radii.size(), 0.0);
  double du0 = 1.0;

  RadialState x{0.0, 1.0};
  double probe_u1 = 0.0, probe_u2 = 0.0;
  long next_sample = 1;
  double r0 = 0.0;
  const double max_dt = R / 1000.0;

  for (double r1 : ends) {
    std::vector<double> times{r0};
    const long first_sample = next_sample;
    while (next_sample <= intervals && radii[next_sample] < r1 - 1e-15 * r1) {
      times.push_back(radii[next_sample]);
      ++next_sample;
    }
    times.push_back(r1);

    auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol, max_dt,
                                           odeint::runge_kutta_dopri5<RadialState>());
    long sample = first_sample;
    std::size_t observed = 0;
    odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), std::min(max_dt, r1 - r0),
                            [&](const RadialState& s, double) {
                              // First and last observation are the segment ends.
                              if (observed > 0 && observed + 1 < times.size()) u[sample++] = s[0];
                              ++observed;
                            });
    if (next_sample <= intervals && std::abs(radii[next_sample] - r1) <= 1e-15 * r1) {
      u[next_sample++] = x[0];
    }
    if (r1 == probe1) probe_u1 = x[0];
    if (r1 == probe2) probe_u2 = x[0];

    const double magnitude = std::max(std::abs(x[0]), std::abs(x[1]));
    if (magnitude > kRescaleThreshold) {
      const double s = 1.0 / magnitude;
      x[0] *= s;
      x[1] *= s;
      for (long i = 0; i < next_sample; ++i) u[i] *= s;
      probe_u1 *= s;
      du0 *= s;
    }
    r0 = r1;
  }

  for (long i = 1; i <= intervals; ++i) {
    const double r = radii[i];
    if (r > R) break;
    if (!(u[i] > 0.0)) {
      const bool allowed = options.crossing_window && r >= options.crossing_window->first &&
                           r <= options.crossing_window->second;
      if (!allowed) {
        std::ostringstream msg;
        msg << "scattering_length: u = r f crosses zero at r = " << r
            << " inside the support (bound-state regime)";
        throw ScatteringError(msg.str());
      }
    }
  }

  const double slope = (probe_u2 - probe_u1) / (probe2 - probe1);
  if (!std::isfinite(slope) || slope == 0.0 || (!options.crossing_window && slope < 0.0)) {
    throw ScatteringError("scattering_length: exterior slope is not positive (bound-state regime)");
  }

  ScatteringResult result;
  result.exterior_slope = slope;
  result.scattering_length = probe1 - probe_u1 / slope;
  result.support_radius = R;
  result.radii = std::move(radii);
  result.f.resize(result.radii.size());
  result.g.resize(result.radii.size());
  result.f[0] = du0 / slope;
  for (std::size_t i = 1; i < result.radii.size(); ++i) result.f[i] = u[i] / (slope * result.radii[i]);
  for (std::size_t i = 0; i < result.f.size(); ++i) result.g[i] = 1.0 - result.f[i];
  return result;
}

// ---------------------------------------------------------------------------

Calibration calibrate_W(const RadialPotential& V_scaled, const BoxPotentialSpec& shell_template,
                        const CalibrationOptions& options) {
  if (!V_scaled.positive) throw std::invalid_argument("calibrate_W: potential must be positive");
  if (!(options.max_shell_ratio > 1.0) || options.scan_points < 2) {
    throw std::invalid_argument("calibrate_W: invalid scan options");
  }

  auto shell_for = [&](double ratio) {
    BoxPotentialSpec W = shell_template;
    W.outer_radius = ratio * W.inner_radius;
    return W;
  };
  auto solve = [&](double ratio) {
    const BoxPotentialSpec W = shell_for(ratio);
    const RadialPotential modified = subtract_shell(V_scaled, W);
    ScatteringOptions opts;
    opts.crossing_window = std::make_pair(W.inner_radius, W.outer_radius);
    return scattering_length(modified, 2.5 * modified.support_radius, opts);
  };
  auto residual = [&](double ratio) {
    try {
      return solve(ratio).scattering_length;
    } catch (const ScatteringError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  const double length_scale = std::max(V_scaled.support_radius, shell_template.inner_radius);
  Calibration out;

  if (shell_template.amplitude == 0.0) {
    // Nothing to cancel: every ratio works, report the smallest admissible one.
    const double ratio = std::nextafter(1.0, 2.0);
    out.shell = shell_for(ratio);
    out.modified = solve(ratio);
    out.residual = out.modified.scattering_length;
    return out;
  }

  std::vector<double> ratios(options.scan_points + 1);
  std::vector<double> values(ratios.size());
  for (int i = 0; i <= options.scan_points; ++i) {
    ratios[i] = 1.0 + (options.max_shell_ratio - 1.0) * i / options.scan_points;
    values[i] = residual(ratios[i]);
  }

  int bracket = -1;
  for (int i = 1; i <= options.scan_points; ++i) {
    if (std::isfinite(values[i - 1]) && std::isfinite(values[i]) && values[i - 1] > 0.0 && values[i] <= 0.0) {
      bracket = i;
      break;
    }
  }
  if (bracket < 0) {
    std::ostringstream msg;
    msg << "calibrate_W: no sign change of the residual scattering length on C in (1, "
        << options.max_shell_ratio << "]; residual(1) = " << values.front()
        << ", residual(C_max) = " << values.back();
    throw ScatteringError(msg.str());
  }
  out.monotone_bracket = true;
  for (int i = 1; i <= bracket; ++i) {
    if (!(values[i] < values[i - 1])) out.monotone_bracket = false;
  }

  double lo = ratios[bracket - 1];
  double hi = ratios[bracket];
  if (values[bracket] == 0.0) {
    lo = hi;
  } else {
    std::uintmax_t max_iter = 200;
    const auto root = boost::math::tools::toms748_solve(
        residual, lo, hi, values[bracket - 1], values[bracket], boost::math::tools::eps_tolerance<double>(52),
        max_iter);
    lo = root.first;
    hi = root.second;
  }
  // Keep the bracket end with the smaller residual.
  const double r_lo = residual(lo);
  const double r_hi = residual(hi);
  const double ratio = std::abs(r_lo) <= std::abs(r_hi) ? lo : hi;

  out.shell = shell_for(ratio);
  out.modified = solve(ratio);
  out.residual = out.modified.scattering_length;
  if (!(std::abs(out.residual) < 1e-8 * length_scale)) {
    std::ostringstream msg;
    msg << "calibrate_W: root finder stalled at C = " << ratio << " with residual " << out.residual;
    throw ScatteringError(msg.str());
  }
  return out;
}

GNorms g_norms(const ScatteringResult& result) {
  const auto& r = result.radii;
  const auto& g = result.g;
  GNorms norms;
  if (r.size() < 3) return norms;
  const double h = r[1] - r[0];
  double l1 = 0.0, l2 = 0.0;
  const std::size_t last = r.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    const double w = (i == 0 || i == last) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    l1 += w * std::abs(g[i]) * r[i] * r[i];
    l2 += w * g[i] * g[i] * r[i] * r[i];
    norms.linf = std::max(norms.linf, std::abs(g[i]));
  }
  norms.l1 = 4.0 * kPi * l1 * h / 3.0;
  norms.l2 = std::sqrt(4.0 * kPi * l2 * h / 3.0);
  return norms;
}

}  // namespace mixbec
