#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixbec/grid.hpp"

namespace mixbec {

inline constexpr std::size_t kDefaultDimensionCap = 200000;
/// Tag written into checkpoints; bump when the enumeration order changes.
inline constexpr const char* kBasisOrderTag = "lex-ascending-1";

/// Number of ways to place n bosons on m sites, C(m + n - 1, n).
std::size_t occupation_count(int sites, int particles);

/// All occupation vectors of one species in ascending lexicographic order,
/// (0, ..., 0, N) first and (N, 0, ..., 0) last.
class SpeciesBasis {
 public:
  SpeciesBasis() = default;
  SpeciesBasis(int sites, int particles);

  int sites() const noexcept { return sites_; }
  int particles() const noexcept { return particles_; }
  std::size_t size() const noexcept { return size_; }

  std::span<const std::uint16_t> occupation(std::size_t index) const noexcept {
    return {occupations_.data() + index * sites_, static_cast<std::size_t>(sites_)};
  }
  /// Inverse of occupation(); throws std::invalid_argument for vectors outside
  /// the sector.
  std::size_t index(std::span<const std::uint16_t> occupation) const;

 private:
  int sites_ = 0;
  int particles_ = 0;
  std::size_t size_ = 0;
  std::vector<std::uint16_t> occupations_;
  // count_[s * (N + 1) + r]: configurations of r particles on s sites.
  std::vector<std::size_t> count_;
};

/// Product of the two species sectors; element (a, b) has flat index
/// a * species_b.size() + b.
class TwoSpeciesBasis {
 public:
  TwoSpeciesBasis(Grid grid, int n1, int n2, std::size_t cap = kDefaultDimensionCap);

  const Grid& grid() const noexcept { return grid_; }
  int sites() const noexcept { return grid_.points(); }
  int n1() const noexcept { return species_a_.particles(); }
  int n2() const noexcept { return species_b_.particles(); }
  const SpeciesBasis& species_a() const noexcept { return species_a_; }
  const SpeciesBasis& species_b() const noexcept { return species_b_; }
  std::size_t size() const noexcept { return species_a_.size() * species_b_.size(); }

  std::size_t flat(std::size_t a, std::size_t b) const noexcept { return a * species_b_.size() + b; }

 private:
  Grid grid_;
  SpeciesBasis species_a_;
  SpeciesBasis species_b_;
};

/// Throws std::length_error with the computed dimension when it exceeds cap,
/// std::invalid_argument for a non-1D grid, M < 2 or N < 1.
std::shared_ptr<const TwoSpeciesBasis> build_basis(const Grid& grid, int n1, int n2,
                                                   std::size_t cap = kDefaultDimensionCap);

/// Dimension that build_basis would produce, without enumerating.
double basis_dimension(int sites, int n1, int n2);

struct ManyBodyState {
  std::shared_ptr<const TwoSpeciesBasis> basis;
  std::vector<complex> coefficients;
  double time = 0.0;

  double norm() const;
};

enum class Scaling { mean_field, beta_family };

std::string to_string(Scaling scaling);

/// Interaction data of H = sum -Lap + (pair terms). Potentials are radial
/// profiles evaluated at the periodic site distance.
///
/// mean_field:   V1 / N1, V2 / N2, V12 / (N1 + N2).
/// beta_family:  N^{2 beta - 1} V(N^beta d) with N = N1, N2, N1 + N2.
struct HamiltonianSpec {
  Scaling scaling = Scaling::mean_field;
  double beta = 0.5;
  std::function<double(double)> V1;
  std::function<double(double)> V2;
  std::function<double(double)> V12;
  int n1 = 1;
  int n2 = 1;

  double c1() const noexcept { return static_cast<double>(n1) / (n1 + n2); }
  double c2() const noexcept { return static_cast<double>(n2) / (n1 + n2); }
};

/// Displacement-indexed pair amplitudes w(d), d = 0..M-1, including the
/// scaling prefactor. `which` is 0, 1, 2 for V1, V2, V12.
std::vector<double> pair_table(const HamiltonianSpec& spec, const Grid& grid, int which);

/// Sparse second-quantized Hamiltonian on one basis. Hopping uses the
/// periodic 3-point stencil; interactions are diagonal in occupations.
class Hamiltonian {
 public:
  Hamiltonian(HamiltonianSpec spec, std::shared_ptr<const TwoSpeciesBasis> basis);

  const HamiltonianSpec& spec() const noexcept { return spec_; }
  const std::shared_ptr<const TwoSpeciesBasis>& basis() const noexcept { return basis_; }
  std::size_t size() const noexcept { return diagonal_.size(); }

  /// out = H in. Buffers must have size() entries and must not alias.
  void apply(std::span<const complex> in, std::span<complex> out) const;
  const std::vector<double>& diagonal() const noexcept { return diagonal_; }

 private:
  struct Hop {
    std::uint32_t target;
    double amplitude;
  };
  struct HopTable {
    std::vector<std::size_t> offsets;
    std::vector<Hop> hops;
  };
  static HopTable build_hops(const SpeciesBasis& basis, double h);

  HamiltonianSpec spec_;
  std::shared_ptr<const TwoSpeciesBasis> basis_;
  std::vector<double> diagonal_;
  HopTable hops_a_;
  HopTable hops_b_;
};

/// H applied to a state (no normalization). Throws std::invalid_argument on a
/// basis mismatch.
ManyBodyState apply_hamiltonian(const Hamiltonian& H, const ManyBodyState& state);

struct KrylovOptions {
  int dimension = 30;
  double tolerance = 1e-12;
  int max_substeps = 100000;
};

/// exp(-i dt H) state by Lanczos with full reorthogonalization. The step is
/// split adaptively until the Krylov residual estimate falls below
/// tolerance. Throws NumericalError when the substep budget runs out.
ManyBodyState propagate(const Hamiltonian& H, const ManyBodyState& state, double dt,
                        const KrylovOptions& options = {});

/// u^{(x) N1} (x) v^{(x) N2} in the occupation basis, normalized. u and v are
/// normalized in the grid L^2 sense.
ManyBodyState product_state(const Field& u, const Field& v, std::shared_ptr<const TwoSpeciesBasis> basis);

/// <Psi, H Psi> / (N1 + N2).
double manybody_energy(const Hamiltonian& H, const ManyBodyState& state);

void write_state(std::ostream& out, const ManyBodyState& state);
/// Reads a checkpoint and rebuilds its basis. Throws std::runtime_error on a
/// different basis-order tag.
ManyBodyState read_state(std::istream& in);
void save_state(const std::string& path, const ManyBodyState& state);
ManyBodyState load_state(const std::string& path);

}  // namespace mixbec
