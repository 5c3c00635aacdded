#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "mixbec/manybody.hpp"
#include "support.hpp"

using namespace mixbec;
using testkit::dot;
using testkit::random_vector;

namespace {

constexpr double kPi = std::numbers::pi;

HamiltonianSpec interacting_spec(int n1, int n2) {
  HamiltonianSpec spec;
  spec.n1 = n1;
  spec.n2 = n2;
  spec.V1 = [](double r) { return 3.0 * std::exp(-r * r); };
  spec.V2 = [](double r) { return 2.0 / (1.0 + r * r); };
  spec.V12 = [](double r) { return 1.0 + 0.5 * std::cos(r); };
  return spec;
}

// Dense first-quantized Hamiltonian on all site strings (x1..xN1, y1..yN2),
// projected onto the symmetric sector via explicit symmetrized basis vectors.
Eigen::MatrixXcd dense_oracle(const HamiltonianSpec& spec, const TwoSpeciesBasis& basis) {
  const Grid& g = basis.grid();
  const int m = g.points();
  const int n = spec.n1 + spec.n2;
  const double h = g.spacing();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= m;

  auto coords = [&](std::size_t flat) {
    std::vector<int> c(n);
    for (int i = n - 1; i >= 0; --i) {
      c[i] = static_cast<int>(flat % m);
      flat /= m;
    }
    return c;
  };
  auto flat_of = [&](const std::vector<int>& c) {
    std::size_t f = 0;
    for (int x : c) f = f * m + x;
    return f;
  };
  auto dist = [&](int x, int y) { return std::abs(g.displacement(((x - y) % m + m) % m)); };
  const double p1 = spec.scaling == Scaling::mean_field ? 1.0 / spec.n1 : 0.0;
  const double p2 = spec.scaling == Scaling::mean_field ? 1.0 / spec.n2 : 0.0;
  const double p12 = spec.scaling == Scaling::mean_field ? 1.0 / n : 0.0;

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(total, total);
  for (std::size_t f = 0; f < total; ++f) {
    const auto c = coords(f);
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      diag += 2.0 / (h * h);
      for (int dir : {1, -1}) {
        auto d = c;
        d[i] = (c[i] + dir + m) % m;
        H(flat_of(d), f) -= 1.0 / (h * h);
      }
    }
    for (int i = 0; i < spec.n1; ++i) {
      for (int j = i + 1; j < spec.n1; ++j) diag += p1 * spec.V1(dist(c[i], c[j]));
      for (int r = 0; r < spec.n2; ++r) diag += p12 * spec.V12(dist(c[i], c[spec.n1 + r]));
    }
    for (int r = 0; r < spec.n2; ++r) {
      for (int s = r + 1; s < spec.n2; ++s) diag += p2 * spec.V2(dist(c[spec.n1 + r], c[spec.n1 + s]));
    }
    H(f, f) += diag;
  }

  const Eigen::MatrixXd S = testkit::symmetrizer(basis);
  return (S.transpose() * H * S).cast<complex>();
}

Eigen::MatrixXcd matrix_of(const Hamiltonian& H) {
  const std::size_t n = H.size();
  Eigen::MatrixXcd M(n, n);
  std::vector<complex> e(n), out(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    H.apply(e, out);
    for (std::size_t i = 0; i < n; ++i) M(i, j) = out[i];
  }
  return M;
}

Field plane_wave(const Grid& g, int n) {
  Field f = sample_field(g, [&](const auto& x) { return std::exp(complex(0.0, 2.0 * kPi * n * x[0] / g.length())); });
  normalize(f);
  return f;
}

}  // namespace

TEST(Basis, Dimensions) {
  EXPECT_EQ(build_basis(make_lattice(2, 1.0), 1, 1)->size(), 4u);
  EXPECT_EQ(build_basis(make_grid(1, 4, 1.0), 2, 2)->size(), 100u);
  EXPECT_EQ(build_basis(make_grid(1, 12, 1.0), 3, 3)->size(), 132496u);
  EXPECT_EQ(occupation_count(14 - 3 + 1, 3), 364u);
}

TEST(Basis, CapIsEnforcedWithComputedDimension) {
  try {
    build_basis(make_grid(1, 12, 1.0), 4, 4);
    FAIL() << "expected length_error";
  } catch (const std::length_error& e) {
    EXPECT_NE(std::string(e.what()).find("1863225"), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_basis(make_grid(1, 4, 1.0), 0, 1), std::invalid_argument);
  EXPECT_THROW(build_basis(make_grid(2, 4, 1.0), 1, 1), std::invalid_argument);
}

TEST(Basis, LexicographicOrderAndRanking) {
  const SpeciesBasis b(4, 3);
  ASSERT_EQ(b.size(), 20u);
  const auto first = b.occupation(0);
  EXPECT_EQ(std::vector<int>(first.begin(), first.end()), (std::vector<int>{0, 0, 0, 3}));
  const auto last = b.occupation(b.size() - 1);
  EXPECT_EQ(std::vector<int>(last.begin(), last.end()), (std::vector<int>{3, 0, 0, 0}));
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(b.index(b.occupation(i)), i);
    if (i > 0) {
      const auto p = b.occupation(i - 1), q = b.occupation(i);
      EXPECT_TRUE(std::lexicographical_compare(p.begin(), p.end(), q.begin(), q.end()));
    }
  }
  const std::vector<std::uint16_t> bad{1, 1, 1, 1};
  EXPECT_THROW(b.index(bad), std::invalid_argument);
}

TEST(Hamiltonian, MatchesDenseFirstQuantizedOracle) {
  for (auto [m, n1, n2] : {std::tuple{2, 1, 1}, std::tuple{3, 1, 1}, std::tuple{3, 2, 1}, std::tuple{3, 2, 2}}) {
    const auto basis = build_basis(make_lattice(m, 1.7), n1, n2);
    for (auto scaling : {Scaling::mean_field}) {
      auto spec = interacting_spec(n1, n2);
      spec.scaling = scaling;
      const Hamiltonian H(spec, basis);
      const auto diff = (matrix_of(H) - dense_oracle(spec, *basis)).cwiseAbs().maxCoeff();
      EXPECT_LT(diff, 1e-11) << "M=" << m << " N1=" << n1 << " N2=" << n2;
    }
  }
}

TEST(Hamiltonian, BetaFamilyPairTable) {
  HamiltonianSpec spec = interacting_spec(2, 3);
  spec.scaling = Scaling::beta_family;
  spec.beta = 0.5;
  const Grid g = make_grid(1, 6, 3.0);
  const auto w = pair_table(spec, g, 2);
  for (int j = 0; j < 6; ++j) {
    const double d = std::abs(g.displacement(j));
    EXPECT_NEAR(w[j], std::pow(5.0, 0.0) * spec.V12(std::sqrt(5.0) * d), 1e-14);
  }
  spec.beta = 0.75;
  const auto w1 = pair_table(spec, g, 0);
  EXPECT_NEAR(w1[1], std::pow(2.0, 0.5) * spec.V1(std::pow(2.0, 0.75) * 0.5), 1e-14);
}

TEST(Hamiltonian, Hermitian) {
  const auto basis = build_basis(make_grid(1, 5, 3.0), 2, 2);
  const Hamiltonian H(interacting_spec(2, 2), basis);
  std::mt19937_64 rng(1);
  std::vector<complex> hp(H.size()), hq(H.size());
  for (int t = 0; t < 20; ++t) {
    const auto p = random_vector(H.size(), rng);
    const auto q = random_vector(H.size(), rng);
    H.apply(p, hp);
    H.apply(q, hq);
    EXPECT_LT(std::abs(dot(p, hq) - std::conj(dot(q, hp))), 1e-12);
  }
}

TEST(Hamiltonian, FreeMomentumEigenstate) {
  const Grid g = make_grid(1, 8, 4.0);
  const auto basis = build_basis(g, 2, 1);
  HamiltonianSpec spec;
  spec.n1 = 2;
  spec.n2 = 1;
  const Hamiltonian H(spec, basis);
  const auto psi = product_state(plane_wave(g, 1), plane_wave(g, -2), basis);
  const double h = g.spacing();
  auto eig = [&](int n) { return 4.0 / (h * h) * std::pow(std::sin(kPi * n * h / g.length()), 2); };
  const double E = 2.0 * eig(1) + eig(-2);
  const auto Hpsi = apply_hamiltonian(H, psi);
  for (std::size_t i = 0; i < psi.coefficients.size(); ++i) {
    EXPECT_LT(std::abs(Hpsi.coefficients[i] - E * psi.coefficients[i]), 1e-10);
  }
  EXPECT_NEAR(manybody_energy(H, psi), E / 3.0, 1e-10);

  const auto out = propagate(H, psi, 0.37);
  const complex phase = std::exp(complex(0.0, -E * 0.37));
  for (std::size_t i = 0; i < psi.coefficients.size(); ++i) {
    EXPECT_LT(std::abs(out.coefficients[i] - phase * psi.coefficients[i]), 1e-12);
  }
}

TEST(Propagate, MatchesDenseExponential) {
  const auto basis = build_basis(make_lattice(2, 1.3), 1, 1);
  const auto spec = interacting_spec(1, 1);
  const Hamiltonian H(spec, basis);
  const Eigen::MatrixXcd dense = dense_oracle(spec, *basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(dense);
  std::mt19937_64 rng(2);
  const auto v = random_vector(4, rng);
  const double dt = 0.8;
  Eigen::VectorXcd phases(4);
  for (int k = 0; k < 4; ++k) phases[k] = std::exp(complex(0.0, -dt * eig.eigenvalues()[k]));
  const Eigen::MatrixXcd U = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
  const Eigen::VectorXcd expected = U * Eigen::Map<const Eigen::VectorXcd>(v.data(), 4);
  const auto out = propagate(H, {basis, v, 0.0}, dt);
  for (int i = 0; i < 4; ++i) EXPECT_LT(std::abs(out.coefficients[i] - expected[i]), 1e-10);
  EXPECT_DOUBLE_EQ(out.time, dt);
}

TEST(Propagate, UnitaryAndReversible) {
  const Grid g = make_grid(1, 6, 6.0);
  const auto basis = build_basis(g, 2, 2);
  const Hamiltonian H(interacting_spec(2, 2), basis);
  std::mt19937_64 rng(3);
  const ManyBodyState psi{basis, random_vector(basis->size(), rng), 0.0};
  const auto fwd = propagate(H, psi, 0.5);
  EXPECT_NEAR(fwd.norm(), 1.0, 1e-10);
  const auto back = propagate(H, fwd, -0.5);
  EXPECT_GT(std::norm(dot(psi.coefficients, back.coefficients)), 1.0 - 1e-10);
}

TEST(Propagate, EnergyConserved) {
  const Grid g = make_grid(1, 6, 6.0);
  const auto basis = build_basis(g, 2, 2);
  const Hamiltonian H(interacting_spec(2, 2), basis);
  std::mt19937_64 rng(4);
  ManyBodyState psi{basis, random_vector(basis->size(), rng), 0.0};
  const double E0 = manybody_energy(H, psi);
  for (int i = 0; i < 10; ++i) psi = propagate(H, psi, 0.1);
  EXPECT_LT(std::abs(manybody_energy(H, psi) - E0) / std::abs(E0), 1e-8);
}

TEST(ProductState, SingleSiteAndTwoParticleCoefficients) {
  const Grid g = make_grid(1, 4, 2.0);
  const auto basis = build_basis(g, 2, 3);
  Field delta(g);
  delta[2] = 1.0 / std::sqrt(g.spacing());
  const auto psi = product_state(delta, delta, basis);
  const std::vector<std::uint16_t> a{0, 0, 2, 0}, b{0, 0, 3, 0};
  const std::size_t idx = basis->flat(basis->species_a().index(a), basis->species_b().index(b));
  for (std::size_t i = 0; i < psi.coefficients.size(); ++i) EXPECT_NEAR(std::abs(psi.coefficients[i]), i == idx ? 1.0 : 0.0, 1e-14);

  const auto b11 = build_basis(g, 1, 1);
  Field u = sample_field(g, [](const auto& x) { return complex(1.0 + x[0], 0.5 * x[0]); });
  Field v = sample_field(g, [](const auto& x) { return complex(std::cos(x[0]), 1.0); });
  normalize(u);
  normalize(v);
  const auto p = product_state(u, v, b11);
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) {
      std::vector<std::uint16_t> na(4, 0), nb(4, 0);
      na[x] = 1;
      nb[y] = 1;
      const auto i = b11->flat(b11->species_a().index(na), b11->species_b().index(nb));
      EXPECT_LT(std::abs(p.coefficients[i] - g.spacing() * u[x] * v[y]), 1e-14);
    }
  }
  EXPECT_THROW(product_state(Field(g), v, b11), std::invalid_argument);
}

TEST(Energy, MeanFieldProductApproachesHartree) {
  const Grid g = make_grid(1, 6, 6.0);
  Field u = sample_field(g, [](const auto& x) { return complex(std::exp(-x[0] * x[0] / 2.0), 0.3 * x[0]); });
  Field v = sample_field(g, [](const auto& x) { return complex(std::exp(-(x[0] - 1.0) * (x[0] - 1.0)), 0.0); });
  normalize(u);
  normalize(v);
  std::vector<double> gaps;
  for (int n : {1, 2, 3}) {
    const auto spec = interacting_spec(n, n);
    const auto basis = build_basis(g, n, n);
    const Hamiltonian H(spec, basis);
    const double E = manybody_energy(H, product_state(u, v, basis));
    // Hartree functional evaluated directly on the grid with the same stencil.
    const double h = g.spacing();
    auto kin = [&](const Field& f) {
      double s = 0.0;
      for (int x = 0; x < 6; ++x) s += std::norm(f[(x + 1) % 6] - f[x]);
      return s / h;
    };
    auto pair = [&](const std::function<double(double)>& V, const Field& a, const Field& b) {
      double s = 0.0;
      for (int x = 0; x < 6; ++x) {
        for (int y = 0; y < 6; ++y) s += std::norm(a[x]) * std::norm(b[y]) * V(std::abs(g.displacement((x - y + 6) % 6)));
      }
      return s * h * h;
    };
    const double Eh = 0.5 * (kin(u) + 0.5 * pair(spec.V1, u, u)) + 0.5 * (kin(v) + 0.5 * pair(spec.V2, v, v)) +
                      0.25 * pair(spec.V12, u, v);
    gaps.push_back(std::abs(E - Eh));
  }
  EXPECT_GT(gaps[0], gaps[1]);
  EXPECT_GT(gaps[1], gaps[2]);
}

TEST(Checkpoint, RoundTrip) {
  const Grid g = make_grid(1, 5, 2.5);
  const auto basis = build_basis(g, 2, 1);
  std::mt19937_64 rng(5);
  const ManyBodyState psi{basis, random_vector(basis->size(), rng), 1.25};
  std::stringstream buf;
  write_state(buf, psi);
  const auto back = read_state(buf);
  EXPECT_EQ(back.basis->size(), basis->size());
  EXPECT_EQ(back.time, 1.25);
  EXPECT_TRUE(back.basis->grid() == g);
  EXPECT_EQ(back.coefficients, psi.coefficients);

  std::stringstream bad("mixbec-state 1\nM 5\nL 2.5\nN1 2\nN2 1\ntime 0\nbasis_order other\ndim 45\nend\n");
  EXPECT_THROW(read_state(bad), std::runtime_error);
}
