#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mixbec/effective.hpp"
#include "mixbec/error.hpp"

using namespace mixbec;

namespace {

constexpr double kPi = std::numbers::pi;

Field gaussian(const Grid& g, double center, double width, double momentum) {
  Field f = sample_field(g, [=](const auto& x) {
    const double d = x[0] - center;
    return std::exp(-d * d / (2 * width * width)) * std::exp(complex(0.0, momentum * x[0]));
  });
  normalize(f);
  return f;
}

CouplingSpec test_hartree(const Grid& g, KineticMode kinetic = KineticMode::spectral) {
  auto spec = hartree_spec(sample_displacement(g, [](double r) { return 2.0 * std::exp(-r * r); }),
                           sample_displacement(g, [](double r) { return 1.5 * std::exp(-0.5 * r * r); }),
                           sample_displacement(g, [](double r) { return 1.0 / (1.0 + r * r); }), 0.4);
  spec.kinetic = kinetic;
  return spec;
}

double max_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l2_diff(const OrbitalState& a, const OrbitalState& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.components.size(); ++c) {
    Field d = a.components[c];
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b.components[c][i];
    s += mass(d);
  }
  return std::sqrt(s);
}

OrbitalState run(const OrbitalState& s0, const CouplingSpec& spec, double T, double dt) {
  return evolve(s0, spec, T, dt, 1 << 30).states.back();
}

}  // namespace

TEST(Effective, BrightSolitonIsStationaryUpToPhase) {
  // g = 8 pi a1 = -4 supports u = sech(x) / sqrt(2) with i u_t = -u.
  const Grid g = make_grid(1, 256, 40.0);
  const Field u0 = sample_field(g, [](const auto& x) { return complex(1.0 / (std::sqrt(2.0) * std::cosh(x[0]))); });
  EXPECT_NEAR(mass(u0), 1.0, 1e-12);
  auto spec = gp_spec(-1.0 / (2.0 * kPi), 0.0, 0.0, 0.5);
  OrbitalState s{{u0, Field(g)}, 0.0};
  const double T = 1.0;
  const auto out = run(s, spec, T, 1e-3);
  Field expected = u0;
  for (auto& z : expected.values) z *= std::exp(complex(0.0, T));
  EXPECT_LT(max_diff(out.components[0], expected), 1e-5);
}

TEST(Effective, FreeGaussianSpreadsAnalytically) {
  const Grid g = make_grid(1, 256, 60.0);
  const double s0 = 1.0;
  const Field u0 = gaussian(g, 0.0, s0, 0.0);
  auto spec = gp_spec(0.0, 0.0, 0.0, 0.5);
  const double T = 1.0;
  const auto out = run({{u0, u0}, 0.0}, spec, T, 0.1);
  // With -Lap as kinetic operator the width obeys s(t)^4 = s0^4 + 4 t^2.
  const complex a = complex(s0 * s0, 2.0 * T);
  Field expected = sample_field(g, [&](const auto& x) { return std::exp(-x[0] * x[0] / (2.0 * a)) / std::sqrt(a); });
  const complex phase = inner_product(expected, out.components[0]);
  for (auto& z : expected.values) z *= phase / std::abs(phase);
  normalize(expected);
  EXPECT_LT(max_diff(out.components[0], expected), 1e-10);
}

TEST(Effective, HartreeConservesMassAndEnergy) {
  const Grid g = make_grid(1, 64, 12.0);
  const auto spec = test_hartree(g);
  const OrbitalState s{{gaussian(g, -1.0, 1.0, 1.0), gaussian(g, 1.5, 0.8, -0.5)}, 0.0};
  const auto traj = evolve(s, spec, 1.0, 1e-3, 100);
  ASSERT_EQ(traj.times.size(), 11u);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    EXPECT_NEAR(traj.masses[i][0], 1.0, 1e-10);
    EXPECT_NEAR(traj.masses[i][1], 1.0, 1e-10);
    EXPECT_NEAR(traj.energy[i], traj.energy[0], 1e-6);
  }
}

TEST(Effective, SecondOrderConvergence) {
  const Grid g = make_grid(1, 64, 12.0);
  for (auto kinetic : {KineticMode::spectral, KineticMode::stencil}) {
    const auto spec = test_hartree(g, kinetic);
    const OrbitalState s{{gaussian(g, -1.0, 1.0, 1.0), gaussian(g, 1.5, 0.8, -0.5)}, 0.0};
    const auto a = run(s, spec, 0.5, 0.02);
    const auto b = run(s, spec, 0.5, 0.01);
    const auto c = run(s, spec, 0.5, 0.005);
    const double order = std::log2(l2_diff(a, b) / l2_diff(b, c));
    EXPECT_NEAR(order, 2.0, 0.2);
  }
}

TEST(Effective, TimeReversal) {
  const Grid g = make_grid(1, 64, 12.0);
  const SplitStepIntegrator integrator(g, test_hartree(g));
  const OrbitalState s{{gaussian(g, -1.0, 1.0, 1.0), gaussian(g, 1.5, 0.8, -0.5)}, 0.0};
  const auto fwd = integrator.step(s, 0.01);
  const auto back = integrator.step(fwd, -0.01);
  EXPECT_LT(l2_diff(back, s), 1e-12);
  EXPECT_NEAR(back.time, 0.0, 1e-15);
}

TEST(Effective, GpMixtureEnergyIsConserved) {
  const Grid g = make_grid(1, 128, 16.0);
  const auto spec = gp_spec(0.05, 0.08, 0.03, 0.3);
  const OrbitalState s{{gaussian(g, -1.0, 1.0, 0.5), gaussian(g, 1.0, 1.2, 0.0)}, 0.0};
  const auto traj = evolve(s, spec, 1.0, 1e-3, 1000);
  EXPECT_NEAR(traj.energy.back(), traj.energy.front(), 1e-6);
}

TEST(Effective, GpEnergyMatchesQuadrature) {
  const Grid g = make_grid(1, 128, 16.0);
  const auto spec = gp_spec(0.05, 0.08, 0.03, 0.3);
  const Field u = gaussian(g, -1.0, 1.0, 0.5);
  const Field v = gaussian(g, 1.0, 1.2, 0.0);
  // Kinetic energy of a Gaussian of width s and momentum k: 1/(2 s^2) + k^2.
  double quartic_u = 0.0, quartic_v = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    quartic_u += std::pow(std::norm(u[i]), 2);
    quartic_v += std::pow(std::norm(v[i]), 2);
    cross += std::norm(u[i]) * std::norm(v[i]);
  }
  const double h = g.spacing();
  const double expected = 0.5 + 0.25 + 1.0 / (2.0 * 1.44) + 4 * kPi * 0.05 * quartic_u * h +
                          4 * kPi * 0.08 * quartic_v * h + 8 * kPi * 0.03 * cross * h;
  EXPECT_NEAR(gp_energy({{u, v}, 0.0}, spec), expected, 1e-9);
}

TEST(Effective, RabiPopulationsOscillate) {
  const Grid g = make_grid(1, 64, 12.0);
  const auto spec = rabi_spec(0.0, [](double) { return 1.0; });
  const OrbitalState s{{gaussian(g, 0.0, 1.0, 0.0), Field(g)}, 0.0};
  const auto traj = evolve(s, spec, 1.0, 1e-3, 250);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    EXPECT_NEAR(traj.masses[i][0], std::pow(std::cos(t), 2), 1e-10);
    EXPECT_NEAR(traj.masses[i][1], std::pow(std::sin(t), 2), 1e-10);
  }
}

TEST(Effective, RabiTimeDependentCouplingIntegratesPulseArea) {
  const Grid g = make_grid(1, 32, 8.0);
  const auto spec = rabi_spec(0.0, [](double t) { return 2.0 * t; });
  const OrbitalState s{{gaussian(g, 0.0, 1.0, 0.0), Field(g)}, 0.0};
  const auto traj = evolve(s, spec, 1.0, 1e-3, 1000);
  // Pulse area int_0^1 2t dt = 1.
  EXPECT_NEAR(traj.masses.back()[0], std::pow(std::cos(1.0), 2), 1e-6);
}

TEST(Effective, Spin1ConservesMassAndMagnetization) {
  const Grid g = make_grid(1, 64, 12.0);
  const auto spec = spin1_spec(0.5);
  Field u = gaussian(g, -0.5, 1.0, 0.3), v = gaussian(g, 0.0, 1.0, 0.0), w = gaussian(g, 0.5, 1.0, -0.3);
  for (auto& z : u.values) z *= std::sqrt(0.3);
  for (auto& z : v.values) z *= std::sqrt(0.5);
  for (auto& z : w.values) z *= std::sqrt(0.2);
  const auto traj = evolve({{u, v, w}, 0.0}, spec, 1.0, 1e-3, 100);
  double swing = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& m = traj.masses[i];
    EXPECT_NEAR(m[0] + m[1] + m[2], 1.0, 1e-8);
    EXPECT_NEAR(traj.magnetization[i], traj.magnetization[0], 1e-8);
    swing = std::max(swing, std::abs(m[1] - traj.masses[0][1]));
  }
  EXPECT_GT(swing, 1e-2);
  EXPECT_NEAR(traj.energy.back(), traj.energy.front(), 1e-5);
}

TEST(Effective, RejectsBadInput) {
  const Grid g = make_grid(1, 16, 4.0);
  EXPECT_THROW(SplitStepIntegrator(g, gp_spec(0.0, 0.0, 0.0, 1.5)), std::invalid_argument);
  const SplitStepIntegrator integrator(g, gp_spec(0.0, 0.0, 0.0, 0.5));
  const OrbitalState one{{gaussian(g, 0.0, 1.0, 0.0)}, 0.0};
  EXPECT_THROW(integrator.step(one, 0.01), std::invalid_argument);
  Field bad = gaussian(g, 0.0, 1.0, 0.0);
  bad[2] = {std::nan(""), 0.0};
  EXPECT_THROW(integrator.step({{bad, bad}, 0.0}, 0.01), NumericalError);
}

TEST(Effective, TrajectoryCsv) {
  const Grid g = make_grid(1, 16, 4.0);
  const auto traj = evolve({{gaussian(g, 0.0, 1.0, 0.0), gaussian(g, 0.0, 1.0, 0.0)}, 0.0},
                           gp_spec(0.0, 0.0, 0.0, 0.5), 0.1, 0.01, 5);
  const auto path = std::filesystem::temp_directory_path() / "mixbec_traj_test.csv";
  write_trajectory_csv(path.string(), traj);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,mass_1,mass_2,energy\r");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3);
  std::filesystem::remove(path);
}
