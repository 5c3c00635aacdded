#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mixbec/grid.hpp"
#include "mixbec/manybody.hpp"

namespace mixbec {

enum class Species { a, b };

namespace detail {
struct LadderTables;
}

/// (1,1): one particle of each species; (1,0), (0,1): one particle of a
/// single species.
enum class MarginalKind { pair, species_a, species_b };

/// Reduced density matrix on site amplitudes. Pair matrices are indexed
/// x * M + y with x the species-A site.
struct ReducedDensity {
  MarginalKind kind = MarginalKind::pair;
  Eigen::MatrixXcd matrix;
  int n1 = 0;
  int n2 = 0;
  double time = 0.0;
};

/// Grid orbital as a unit vector in site space: sqrt(h) * u.
Eigen::VectorXcd site_vector(const Field& u);

ReducedDensity reduce(const ManyBodyState& state, MarginalKind kind);

/// 1 - <u (x) v, gamma^(1,1) u (x) v>.
double alpha_11(const ManyBodyState& state, const Field& u, const Field& v);
/// 1 - <u, gamma^(1,0) u>.
double alpha_10(const ManyBodyState& state, const Field& u);
/// 1 - <v, gamma^(0,1) v>.
double alpha_01(const ManyBodyState& state, const Field& v);

/// Trace norm of gamma - |phi><phi| where phi is u (x) v for pair marginals
/// and u (respectively v) for single-species marginals.
double trace_distance(const ReducedDensity& gamma, const Field& u, const Field& v);

struct MarginalBounds {
  double lhs_max = 0.0;
  double middle = 0.0;
  double rhs_sum = 0.0;
  bool lower_holds = false;
  bool upper_holds = false;
};

/// max(alpha_10, alpha_01) <= alpha_11 <= alpha_10 + alpha_01, each with the
/// given slack.
MarginalBounds marginal_bounds_check(const ManyBodyState& state, const Field& u, const Field& v,
                                     double slack = 1e-10);

// ---------------------------------------------------------------------------
// Weights and counting projectors

/// Weight g on excitation numbers 0..N. Formula kinds can also be evaluated
/// past N (needed by the shifted operators).
struct WeightFunction {
  enum class Kind { s, n, m, custom };

  Kind kind = Kind::s;
  int particles = 1;
  double xi = 0.2;
  std::vector<double> table;

  double operator()(int k) const;
  std::vector<double> values() const;
  std::string name() const;
};

WeightFunction weight_s(int particles);
WeightFunction weight_n(int particles);
/// sqrt(k/N) for k >= N^{1 - 2 xi}, (N^{-1+xi} k + N^{-xi}) / 2 below.
WeightFunction weight_m(int particles, double xi);
WeightFunction weight_custom(std::vector<double> values);

/// Spectral family of Q = sum_i q_i for one species, q = 1 - |u><u|. P_k is
/// the eigenvalue-k projection of Q, applied through its Lagrange polynomial.
class CountingProjectorSet {
 public:
  CountingProjectorSet(std::shared_ptr<const TwoSpeciesBasis> basis, const Field& orbital, Species species);

  Species species() const noexcept { return species_; }
  int particles() const noexcept { return particles_; }
  const std::shared_ptr<const TwoSpeciesBasis>& basis() const noexcept { return basis_; }

  /// Q psi.
  std::vector<complex> apply_q(const std::vector<complex>& psi) const;
  /// Occupation of the condensate orbital, n_u psi = (N - Q) psi.
  std::vector<complex> apply_condensate_number(const std::vector<complex>& psi) const;
  /// P_k psi; zero for k outside [0, N].
  std::vector<complex> project(int k, const std::vector<complex>& psi) const;
  /// ||P_k psi||^2 for k = 0..N.
  std::vector<double> distribution(const std::vector<complex>& psi) const;
  /// sum_k g(k + shift) P_k psi.
  std::vector<complex> apply_weight(const WeightFunction& g, const std::vector<complex>& psi, int shift = 0) const;

 private:
  std::shared_ptr<const TwoSpeciesBasis> basis_;
  std::shared_ptr<const detail::LadderTables> ladder_;
  Eigen::VectorXcd orbital_;
  Species species_;
  int particles_;
};

CountingProjectorSet counting_projectors(std::shared_ptr<const TwoSpeciesBasis> basis, const Field& orbital,
                                         Species species);

/// <Psi, g^ Psi>.
double weight_expectation(const ManyBodyState& state, const WeightFunction& g, const CountingProjectorSet& projectors);

// ---------------------------------------------------------------------------
// Time derivative of alpha^(1,1)

struct DerivativeTerms {
  complex v1;
  complex v2;
  complex v12;

  complex total() const { return v1 + v2 + v12; }
};

/// Commutator expectations whose sum times i is the time derivative of
/// alpha^(1,1) along the joint many-body / Hartree flow. Mean-field
/// Hamiltonians only.
DerivativeTerms derivative_decomposition(const ManyBodyState& state, const Field& u, const Field& v,
                                         const HamiltonianSpec& spec);

/// The 16 projector sandwiches (ab, cd) of <Psi, [Z, S] Psi> with
/// Z = V12(x1 - y1) - (V12 * |v|^2)(x1) - (V12 * |u|^2)(y1) and
/// S = sum_kl p_k^A p_l^B / (N1 N2), each side split by (p1 + q1)^A (p1 + q1)^B.
struct LambdaOmegaTable {
  /// Index of a side label: 0 = pp, 1 = pq, 2 = qp, 3 = qq (A letter first).
  static constexpr std::array<const char*, 4> labels{"pp", "pq", "qp", "qq"};

  std::array<std::array<complex, 4>, 4> terms{};
  /// <Psi, [Z, S] Psi> evaluated without the insertion.
  complex commutator;

  complex at(const std::string& left, const std::string& right) const;
  complex sum() const;
  complex lambda() const;
  complex omega() const;
};

LambdaOmegaTable lambda_omega_terms(const ManyBodyState& state, const Field& u, const Field& v,
                                    const std::function<double(double)>& V12);

// ---------------------------------------------------------------------------
// Corrected functionals

struct CorrectionInputs {
  /// Same-species and cross-species pair functions, evaluated at the
  /// periodic site distance. Empty functions count as zero.
  std::function<double(double)> g_same;
  std::function<double(double)> g_cross;
  WeightFunction weight;
  double manybody_energy = 0.0;
  double effective_energy = 0.0;
};

/// <Psi, m^ Psi> + |E(Psi) - E_eff| for the chosen species.
double alpha_m_less(const ManyBodyState& state, const Field& orbital, Species species, const CorrectionInputs& in);

/// alpha_m_less minus the pair corrections built from
/// R_(12) = p1 p2 (m^ - m^_2) + (p1 q2 + q1 p2)(m^ - m^_1), where
/// m^_j = sum_k m(k + j) P_k. R vanishes for species with one particle.
double corrected_alpha(const ManyBodyState& state, const Field& u, const Field& v, Species species,
                       const CorrectionInputs& in);

}  // namespace mixbec
