#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "mixbec/manybody.hpp"

namespace mixbec::testkit {

inline std::vector<complex> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  std::vector<complex> v(n);
  double s = 0.0;
  for (auto& z : v) {
    z = {d(rng), d(rng)};
    s += std::norm(z);
  }
  for (auto& z : v) z /= std::sqrt(s);
  return v;
}

inline complex dot(const std::vector<complex>& a, const std::vector<complex>& b) {
  complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline Field random_orbital(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Field f(g);
  for (auto& z : f.values) z = {d(rng), d(rng)};
  normalize(f);
  return f;
}

/// Site strings (x1..xN1, y1..yN2) with x1 slowest.
struct Strings {
  int m;
  int n1;
  int n2;
  std::size_t total = 1;

  Strings(int sites, int a, int b) : m(sites), n1(a), n2(b) {
    for (int i = 0; i < a + b; ++i) total *= sites;
  }
  std::vector<int> coords(std::size_t flat) const {
    std::vector<int> c(n1 + n2);
    for (int i = n1 + n2 - 1; i >= 0; --i) {
      c[i] = static_cast<int>(flat % m);
      flat /= m;
    }
    return c;
  }
};

/// Columns: normalized symmetrized site strings, one per occupation-basis
/// element.
inline Eigen::MatrixXd symmetrizer(const TwoSpeciesBasis& basis) {
  const Strings s(basis.sites(), basis.n1(), basis.n2());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(s.total, basis.size());
  for (std::size_t f = 0; f < s.total; ++f) {
    const auto c = s.coords(f);
    std::vector<std::uint16_t> na(s.m, 0), nb(s.m, 0);
    for (int i = 0; i < s.n1; ++i) ++na[c[i]];
    for (int r = 0; r < s.n2; ++r) ++nb[c[s.n1 + r]];
    S(f, basis.flat(basis.species_a().index(na), basis.species_b().index(nb))) = 1.0;
  }
  for (Eigen::Index j = 0; j < S.cols(); ++j) S.col(j).normalize();
  return S;
}

}  // namespace mixbec::testkit
