#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mixbec/grid.hpp"

using namespace mixbec;

namespace {

constexpr double kPi = std::numbers::pi;

Field random_field(const Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Field f(g);
  for (auto& z : f.values) z = {d(rng), d(rng)};
  return f;
}

}  // namespace

TEST(Grid, RejectsInvalidParameters) {
  EXPECT_THROW(make_grid(0, 16, 1.0), std::invalid_argument);
  EXPECT_THROW(make_grid(4, 16, 1.0), std::invalid_argument);
  EXPECT_THROW(make_grid(1, 3, 1.0), std::invalid_argument);
  EXPECT_THROW(make_grid(1, 16, 0.0), std::invalid_argument);
  EXPECT_THROW(make_lattice(1, 1.0), std::invalid_argument);
  const Grid small = make_lattice(2, 1.0);
  EXPECT_EQ(small.size(), 2u);
  EXPECT_DOUBLE_EQ(small.displacement(1), -0.5);
}

TEST(Grid, PositionsAndDisplacements) {
  const Grid g = make_grid(1, 8, 4.0);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.5);
  EXPECT_DOUBLE_EQ(g.position(0), -2.0);
  EXPECT_DOUBLE_EQ(g.position(7), 1.5);
  EXPECT_DOUBLE_EQ(g.displacement(3), 1.5);
  EXPECT_DOUBLE_EQ(g.displacement(4), -2.0);
  EXPECT_DOUBLE_EQ(g.displacement(7), -0.5);
  const Grid g3 = make_grid(3, 4, 2.0);
  EXPECT_EQ(g3.size(), 64u);
  EXPECT_DOUBLE_EQ(g3.cell_volume(), 0.125);
  for (std::size_t i = 0; i < g3.size(); ++i) EXPECT_EQ(g3.ravel(g3.unravel(i)), i);
}

TEST(Spectral, PlaneWaveIsLaplacianEigenvector) {
  const int m = 32;
  const double L = 2.0 * kPi;
  const Grid g = make_grid(1, m, L);
  for (int n : {1, 3, -5, 15}) {
    const Field f = sample_field(g, [n](const auto& x) { return std::exp(complex(0.0, n * x[0])); });
    const Field lap = apply_laplacian(f);
    const Field st = apply_stencil_laplacian(f);
    const double h = g.spacing();
    const double stencil_eig = 4.0 / (h * h) * std::pow(std::sin(n * h / 2.0), 2);
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_NEAR(std::abs(lap[i] - double(n * n) * f[i]), 0.0, 1e-10);
      EXPECT_NEAR(std::abs(st[i] - stencil_eig * f[i]), 0.0, 1e-10);
    }
  }
}

TEST(Spectral, StencilSymbolMatchesDirectStencil) {
  const Grid g = make_grid(2, 8, 3.0);
  const Field f = random_field(g, 7);
  const Field direct = apply_stencil_laplacian(f);
  const auto symbol = stencil_symbol(g);
  std::vector<complex> hat(g.size()), back(g.size());
  forward_transform(g, f.values, hat);
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= symbol[i] / double(g.size());
  inverse_transform(g, hat, back);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::abs(back[i] - direct[i]), 0.0, 1e-10);
}

TEST(Spectral, GaussianLaplacian2D) {
  const Grid g = make_grid(2, 64, 20.0);
  const Field f = sample_field(g, [](const auto& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1])); });
  const Field lap = apply_laplacian(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unravel(i);
    const double r2 = std::pow(g.position(idx[0]), 2) + std::pow(g.position(idx[1]), 2);
    const double expected = (4.0 - 4.0 * r2) * std::exp(-r2);
    EXPECT_NEAR(lap[i].real(), expected, 1e-9);
  }
}

TEST(Spectral, NonFiniteInputRejected) {
  const Grid g = make_grid(1, 8, 1.0);
  Field f(g);
  f[3] = {std::nan(""), 0.0};
  EXPECT_THROW(apply_laplacian(f), std::invalid_argument);
  EXPECT_THROW(apply_stencil_laplacian(f), std::invalid_argument);
}

TEST(Convolution, MatchesDirectSum) {
  for (int dim : {1, 2}) {
    const Grid g = make_grid(dim, dim == 1 ? 24 : 10, 5.0);
    const RealField V = sample_displacement(g, [](double r) { return std::exp(-r * r) + 0.3 / (1.0 + r); });
    RealField rho(g);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& x : rho.values) x = u(rng);
    const RealField fast = periodic_convolve(V, rho);
    const int m = g.points();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto xi = g.unravel(i);
      double s = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        const auto yj = g.unravel(j);
        std::array<int, 3> d{0, 0, 0};
        for (int a = 0; a < dim; ++a) d[a] = ((xi[a] - yj[a]) % m + m) % m;
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) r2 += std::pow(g.displacement(d[a]), 2);
        const double r = std::sqrt(r2);
        s += (std::exp(-r * r) + 0.3 / (1.0 + r)) * rho[j];
      }
      EXPECT_NEAR(fast[i], s * g.cell_volume(), 1e-11);
    }
  }
}

TEST(Convolution, DisplacementSamplingIsEven) {
  const Grid g = make_grid(1, 9, 3.0);
  const RealField V = sample_displacement(g, [](double r) { return r * r + r; });
  for (int j = 1; j < 9; ++j) EXPECT_DOUBLE_EQ(V[j], V[9 - j]);
}

TEST(L2, NormalizeAndInnerProduct) {
  const Grid g = make_grid(1, 16, 2.0);
  Field f = random_field(g, 11);
  normalize(f);
  EXPECT_NEAR(mass(f), 1.0, 1e-14);
  EXPECT_NEAR(norm(f), 1.0, 1e-14);
  EXPECT_NEAR(inner_product(f, f).real(), 1.0, 1e-14);
  const RealField rho = density(f);
  double s = 0.0;
  for (double x : rho.values) s += x;
  EXPECT_NEAR(s * g.spacing(), 1.0, 1e-14);
}

TEST(FieldIO, RoundTrip) {
  const Grid g = make_grid(2, 6, 1.5);
  const Field f = random_field(g, 5);
  std::stringstream buf;
  write_field(buf, f);
  const Field back = read_field(buf);
  EXPECT_TRUE(back.grid == g);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(back[i], f[i]);
}

TEST(FieldIO, RejectsBadHeader) {
  std::stringstream buf("not-a-field\n");
  EXPECT_THROW(read_field(buf), std::runtime_error);
}
