#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mixbec/error.hpp"
#include "mixbec/scattering.hpp"

using namespace mixbec;

namespace {

constexpr double kPi = std::numbers::pi;

double barrier_length(double V0, double R) {
  const double k = std::sqrt(V0 / 2.0);
  return R - std::tanh(k * R) / k;
}

}  // namespace

TEST(Scattering, SquareBarrierClosedForm) {
  for (double V0 : {0.5, 2.0, 10.0, 50.0}) {
    const auto res = scattering_length(RadialPotential::square_barrier(V0, 1.0), 4.0);
    EXPECT_NEAR(res.scattering_length, barrier_length(V0, 1.0), 1e-9) << "V0 = " << V0;
  }
  EXPECT_NEAR(scattering_length(RadialPotential::square_barrier(2.0, 1.0), 4.0).scattering_length,
              1.0 - std::tanh(1.0), 1e-10);
}

TEST(Scattering, HardSphereLimit) {
  const auto res = scattering_length(RadialPotential::square_barrier(1e6, 1.0), 3.0);
  EXPECT_NEAR(res.scattering_length, barrier_length(1e6, 1.0), 1e-8);
  EXPECT_GT(res.scattering_length, 0.99);
}

TEST(Scattering, ZeroPotential) {
  const auto res = scattering_length(RadialPotential::zero(), 3.0);
  EXPECT_NEAR(res.scattering_length, 0.0, 1e-12);
  for (double f : res.f) EXPECT_NEAR(f, 1.0, 1e-12);
}

TEST(Scattering, ProfileInteriorAndExterior) {
  const double V0 = 2.0, R = 1.0;
  const double k = std::sqrt(V0 / 2.0);
  const auto res = scattering_length(RadialPotential::square_barrier(V0, R), 5.0);
  const double a = res.scattering_length;
  // Interior f = sinh(k r) / (k r cosh(k R)) normalized to the exterior 1 - a / r.
  const double c = (R - a) / (R * std::sinh(k * R) / R);
  ASSERT_EQ(res.radii.size() % 2, 1u);
  for (std::size_t i = 1; i < res.radii.size(); i += 37) {
    const double r = res.radii[i];
    const double expected = r > R ? 1.0 - a / r : c * std::sinh(k * r) / r;
    EXPECT_NEAR(res.f[i], expected, 1e-9) << "r = " << r;
  }
  EXPECT_NEAR(res.f[0], c * k, 1e-9);
  EXPECT_NEAR(res.f.back(), 1.0 - a / res.radii.back(), 1e-10);
  for (std::size_t i = 0; i < res.f.size(); ++i) EXPECT_NEAR(res.g[i], 1.0 - res.f[i], 0.0);
}

TEST(Scattering, ScalingLaw) {
  const auto V = RadialPotential::square_barrier(2.0, 1.0);
  const double a = scattering_length(V, 4.0).scattering_length;
  for (double N : {2.0, 4.0, 8.0}) {
    const auto scaled = scale_potential(V, N, 1.0);
    EXPECT_NEAR(scaled.support_radius, 1.0 / N, 1e-15);
    const double aN = scattering_length(scaled, 4.0 / N).scattering_length;
    EXPECT_NEAR(aN * N / a, 1.0, 1e-8);
  }
}

TEST(Scattering, RejectsSmallDomainAndBoundStates) {
  const auto V = RadialPotential::square_barrier(2.0, 1.0);
  EXPECT_THROW(scattering_length(V, 1.5), std::invalid_argument);
  // A deep well past the first threshold (V0 R^2 / 2 > (pi/2)^2) has u crossing zero.
  EXPECT_THROW(scattering_length(RadialPotential::square_barrier(-20.0, 1.0), 4.0), ScatteringError);
}

TEST(Scattering, BoxTemplate) {
  const auto W = box_template(0.25, 1.0, 32.0, PairSpecies::one, 1.5);
  EXPECT_NEAR(W.amplitude, 4.0 * kPi * 0.25 * 32.0 * 32.0, 1e-9);
  EXPECT_DOUBLE_EQ(W.inner_radius, 1.0 / 32.0);
  EXPECT_DOUBLE_EQ(W.shell_ratio(), 1.5);
  const auto Wc = box_template(0.25, 0.5, 16.0, PairSpecies::cross);
  EXPECT_NEAR(Wc.amplitude, 4.0 * kPi * 0.25 * std::pow(16.0, 0.5), 1e-12);
  EXPECT_DOUBLE_EQ(Wc.inner_radius, 0.25);
}

TEST(Scattering, CalibrationZeroesScatteringLength) {
  const auto V = RadialPotential::square_barrier(2.0, 1.0);
  const double a = scattering_length(V, 4.0).scattering_length;
  const double N = 32.0;
  const auto scaled = scale_potential(V, N, 1.0);
  const auto W = box_template(a, 1.0, N, PairSpecies::one);
  const auto cal = calibrate_W(scaled, W);
  EXPECT_GT(cal.shell.shell_ratio(), 1.0);
  EXPECT_LT(cal.shell.shell_ratio(), 1.672);
  EXPECT_LT(std::abs(cal.residual), 1e-8 * scaled.support_radius);
  EXPECT_TRUE(cal.monotone_bracket);

  // The ratio is independent of N at beta = 1.
  const auto cal8 = calibrate_W(scale_potential(V, 8.0, 1.0), box_template(a, 1.0, 8.0, PairSpecies::one));
  EXPECT_NEAR(cal8.shell.shell_ratio(), cal.shell.shell_ratio(), 1e-7);
}

TEST(Scattering, CalibrationOfZeroTemplate) {
  const auto V = RadialPotential::zero();
  const auto W = box_template(0.0, 1.0, 4.0, PairSpecies::two);
  const auto cal = calibrate_W(scale_potential(V, 4.0, 1.0), W);
  EXPECT_LT(std::abs(cal.residual), 1e-12);
  EXPECT_GT(cal.shell.shell_ratio(), 1.0);
}

TEST(Scattering, CalibrationWithoutSignChangeFails) {
  const auto V = RadialPotential::square_barrier(2.0, 1.0);
  const auto W = box_template(1e-4, 1.0, 4.0, PairSpecies::one);
  CalibrationOptions opts;
  opts.max_shell_ratio = 1.01;
  opts.scan_points = 8;
  EXPECT_THROW(calibrate_W(scale_potential(V, 4.0, 1.0), W, opts), ScatteringError);
}

TEST(Scattering, GNormsOfBarrier) {
  const double V0 = 2.0;
  const auto res = scattering_length(RadialPotential::square_barrier(V0, 1.0), 3.0);
  const auto n = g_norms(res);
  EXPECT_NEAR(n.linf, res.g.front(), 1e-15);
  // Exterior contribution of g = a / r to the L1 norm: 4 pi a (9 - 1) / 2.
  const double a = res.scattering_length;
  EXPECT_GT(n.l1, 4.0 * kPi * a * 4.0);
  EXPECT_GT(n.l2, 0.0);
}
