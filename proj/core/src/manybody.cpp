#include "mixbec/manybody.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"
#include "mixbec/error.hpp"

namespace mixbec {
namespace {

constexpr const char* kStateMagic = "mixbec-state 1";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

void require_same_basis(const Hamiltonian& H, const ManyBodyState& state, const char* where) {
  const auto& a = *H.basis();
  if (!state.basis) throw std::invalid_argument(std::string(where) + ": state has no basis");
  const auto& b = *state.basis;
  if (&a != &b && !(a.grid() == b.grid() && a.n1() == b.n1() && a.n2() == b.n2())) {
    throw std::invalid_argument(std::string(where) + ": state basis does not match the Hamiltonian");
  }
  if (state.coefficients.size() != a.size()) {
    throw std::invalid_argument(std::string(where) + ": coefficient count does not match the basis");
  }
}

double norm2(std::span<const complex> x) {
  double s = 0.0;
  for (const auto& z : x) s += std::norm(z);
  return std::sqrt(s);
}

complex dot(std::span<const complex> a, std::span<const complex> b) {
  complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

std::size_t occupation_count(int sites, int particles) {
  if (sites <= 0) return particles == 0 ? 1 : 0;
  // C(sites + particles - 1, particles) by the multiplicative formula.
  double c = 1.0;
  for (int i = 1; i <= particles; ++i) c = c * (sites - 1 + i) / i;
  return static_cast<std::size_t>(std::llround(c));
}

double basis_dimension(int sites, int n1, int n2) {
  return static_cast<double>(occupation_count(sites, n1)) * static_cast<double>(occupation_count(sites, n2));
}

// ---------------------------------------------------------------------------

SpeciesBasis::SpeciesBasis(int sites, int particles) : sites_(sites), particles_(particles) {
  if (sites < 1 || particles < 0) throw std::invalid_argument("SpeciesBasis: invalid sector");
  if (particles > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("SpeciesBasis: too many particles");
  }
  const int stride = particles + 1;
  count_.assign(static_cast<std::size_t>(sites + 1) * stride, 0);
  count_[0] = 1;
  for (int s = 1; s <= sites; ++s) {
    for (int r = 0; r <= particles; ++r) {
      std::size_t c = 0;
      for (int v = 0; v <= r; ++v) c += count_[(s - 1) * stride + (r - v)];
      count_[s * stride + r] = c;
    }
  }
  size_ = count_[sites * stride + particles];
  occupations_.reserve(size_ * sites);

  std::vector<std::uint16_t> occ(sites, 0);
  // Depth-first enumeration with ascending values at each site.
  const std::function<void(int, int)> fill = [&](int site, int remaining) {
    if (site == sites - 1) {
      occ[site] = static_cast<std::uint16_t>(remaining);
      occupations_.insert(occupations_.end(), occ.begin(), occ.end());
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      occ[site] = static_cast<std::uint16_t>(v);
      fill(site + 1, remaining - v);
    }
  };
  fill(0, particles);
}

std::size_t SpeciesBasis::index(std::span<const std::uint16_t> occupation) const {
  if (occupation.size() != static_cast<std::size_t>(sites_)) {
    throw std::invalid_argument("SpeciesBasis::index: wrong number of sites");
  }
  const int stride = particles_ + 1;
  int remaining = particles_;
  std::size_t rank = 0;
  for (int i = 0; i < sites_; ++i) {
    const int n = occupation[i];
    if (n > remaining) throw std::invalid_argument("SpeciesBasis::index: occupation outside the sector");
    if (i == sites_ - 1) {
      if (n != remaining) throw std::invalid_argument("SpeciesBasis::index: occupation outside the sector");
      break;
    }
    for (int v = 0; v < n; ++v) rank += count_[(sites_ - i - 1) * stride + (remaining - v)];
    remaining -= n;
  }
  return rank;
}

TwoSpeciesBasis::TwoSpeciesBasis(Grid grid, int n1, int n2, std::size_t cap) : grid_(std::move(grid)) {
  if (grid_.dim() != 1) throw std::invalid_argument("TwoSpeciesBasis: many-body grids are one-dimensional");
  if (grid_.points() < 2) throw std::invalid_argument("TwoSpeciesBasis: need at least two sites");
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("TwoSpeciesBasis: particle numbers must be >= 1");
  const double dim = basis_dimension(grid_.points(), n1, n2);
  if (dim > static_cast<double>(cap)) {
    throw std::length_error("basis dimension " + format_double(dim) + " exceeds the cap " + std::to_string(cap));
  }
  species_a_ = SpeciesBasis(grid_.points(), n1);
  species_b_ = SpeciesBasis(grid_.points(), n2);
}

std::shared_ptr<const TwoSpeciesBasis> build_basis(const Grid& grid, int n1, int n2, std::size_t cap) {
  return std::make_shared<const TwoSpeciesBasis>(grid, n1, n2, cap);
}

double ManyBodyState::norm() const { return norm2(coefficients); }

std::string to_string(Scaling scaling) {
  return scaling == Scaling::mean_field ? "mean_field" : "beta_family";
}

// ---------------------------------------------------------------------------

std::vector<double> pair_table(const HamiltonianSpec& spec, const Grid& grid, int which) {
  const std::function<double(double)>* V = which == 0 ? &spec.V1 : which == 1 ? &spec.V2 : &spec.V12;
  const double N = which == 0 ? spec.n1 : which == 1 ? spec.n2 : spec.n1 + spec.n2;
  std::vector<double> w(grid.points(), 0.0);
  if (!*V) return w;
  if (spec.scaling == Scaling::beta_family && !(spec.beta > 0.0 && spec.beta <= 1.0)) {
    throw std::invalid_argument("pair_table: beta must lie in (0, 1]");
  }
  for (int j = 0; j < grid.points(); ++j) {
    const double d = std::abs(grid.displacement(j));
    if (spec.scaling == Scaling::mean_field) {
      w[j] = (*V)(d) / N;
    } else {
      w[j] = std::pow(N, 2.0 * spec.beta - 1.0) * (*V)(std::pow(N, spec.beta) * d);
    }
  }
  return w;
}

Hamiltonian::HopTable Hamiltonian::build_hops(const SpeciesBasis& basis, double h) {
  const int m = basis.sites();
  // Off-diagonal part of the one-body stencil matrix; with two sites both
  // neighbours coincide and the entries add up.
  std::vector<double> t(static_cast<std::size_t>(m) * m, 0.0);
  const double inv_h2 = 1.0 / (h * h);
  for (int x = 0; x < m; ++x) {
    t[x * m + (x + 1) % m] -= inv_h2;
    t[x * m + (x + m - 1) % m] -= inv_h2;
  }

  HopTable table;
  table.offsets.reserve(basis.size() + 1);
  table.offsets.push_back(0);
  std::vector<std::uint16_t> occ(m);
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const auto src = basis.occupation(s);
    for (int y = 0; y < m; ++y) {
      if (src[y] == 0) continue;
      for (int x = 0; x < m; ++x) {
        if (x == y || t[x * m + y] == 0.0) continue;
        std::copy(src.begin(), src.end(), occ.begin());
        const double amp = t[x * m + y] * std::sqrt(static_cast<double>(occ[y]) * (occ[x] + 1));
        --occ[y];
        ++occ[x];
        table.hops.push_back({static_cast<std::uint32_t>(basis.index(occ)), amp});
      }
    }
    table.offsets.push_back(table.hops.size());
  }
  return table;
}

Hamiltonian::Hamiltonian(HamiltonianSpec spec, std::shared_ptr<const TwoSpeciesBasis> basis)
    : spec_(std::move(spec)), basis_(std::move(basis)) {
  if (!basis_) throw std::invalid_argument("Hamiltonian: null basis");
  if (spec_.n1 != basis_->n1() || spec_.n2 != basis_->n2()) {
    throw std::invalid_argument("Hamiltonian: particle numbers do not match the basis");
  }
  const Grid& grid = basis_->grid();
  const int m = grid.points();
  const double h = grid.spacing();
  const auto w1 = pair_table(spec_, grid, 0);
  const auto w2 = pair_table(spec_, grid, 1);
  const auto w12 = pair_table(spec_, grid, 2);

  const auto same_species = [m](std::span<const std::uint16_t> n, const std::vector<double>& w) {
    double e = 0.0;
    for (int x = 0; x < m; ++x) {
      if (n[x] == 0) continue;
      for (int y = 0; y < m; ++y) e += 0.5 * n[x] * n[y] * w[(x - y + m) % m];
      e -= 0.5 * n[x] * w[0];
    }
    return e;
  };

  const auto& A = basis_->species_a();
  const auto& B = basis_->species_b();
  const double kinetic = 2.0 / (h * h) * (spec_.n1 + spec_.n2);
  std::vector<double> energy_b(B.size());
  for (std::size_t b = 0; b < B.size(); ++b) energy_b[b] = same_species(B.occupation(b), w2);

  diagonal_.resize(basis_->size());
  std::vector<double> field(m);
  for (std::size_t a = 0; a < A.size(); ++a) {
    const auto na = A.occupation(a);
    const double energy_a = same_species(na, w1);
    for (int y = 0; y < m; ++y) {
      double s = 0.0;
      for (int x = 0; x < m; ++x) s += na[x] * w12[(x - y + m) % m];
      field[y] = s;
    }
    for (std::size_t b = 0; b < B.size(); ++b) {
      const auto nb = B.occupation(b);
      double cross = 0.0;
      for (int y = 0; y < m; ++y) cross += nb[y] * field[y];
      diagonal_[basis_->flat(a, b)] = kinetic + energy_a + energy_b[b] + cross;
    }
  }

  hops_a_ = build_hops(A, h);
  hops_b_ = build_hops(B, h);
}

void Hamiltonian::apply(std::span<const complex> in, std::span<complex> out) const {
  if (in.size() != size() || out.size() != size()) throw std::invalid_argument("Hamiltonian::apply: size mismatch");
  const std::size_t nb = basis_->species_b().size();
  const std::size_t na = basis_->species_a().size();
  for (std::size_t i = 0; i < size(); ++i) out[i] = diagonal_[i] * in[i];
  for (std::size_t a = 0; a < na; ++a) {
    const complex* src = in.data() + a * nb;
    for (std::size_t k = hops_a_.offsets[a]; k < hops_a_.offsets[a + 1]; ++k) {
      const auto& hop = hops_a_.hops[k];
      complex* dst = out.data() + static_cast<std::size_t>(hop.target) * nb;
      for (std::size_t b = 0; b < nb; ++b) dst[b] += hop.amplitude * src[b];
    }
  }
  for (std::size_t a = 0; a < na; ++a) {
    const complex* src = in.data() + a * nb;
    complex* dst = out.data() + a * nb;
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t k = hops_b_.offsets[b]; k < hops_b_.offsets[b + 1]; ++k) {
        const auto& hop = hops_b_.hops[k];
        dst[hop.target] += hop.amplitude * src[b];
      }
    }
  }
}

ManyBodyState apply_hamiltonian(const Hamiltonian& H, const ManyBodyState& state) {
  require_same_basis(H, state, "apply_hamiltonian");
  ManyBodyState out{state.basis, std::vector<complex>(state.coefficients.size()), state.time};
  H.apply(state.coefficients, out.coefficients);
  return out;
}

// ---------------------------------------------------------------------------

ManyBodyState propagate(const Hamiltonian& H, const ManyBodyState& state, double dt, const KrylovOptions& options) {
  require_same_basis(H, state, "propagate");
  if (!std::isfinite(dt)) throw std::invalid_argument("propagate: dt must be finite");
  if (options.dimension < 2 || !(options.tolerance > 0.0)) throw std::invalid_argument("propagate: bad Krylov options");

  const std::size_t n = H.size();
  const int m = static_cast<int>(std::min<std::size_t>(options.dimension, n));
  std::vector<complex> psi = state.coefficients;
  std::vector<std::vector<complex>> V(m + 1, std::vector<complex>(n));
  std::vector<complex> w(n);

  double remaining = dt;
  double tau = dt;
  int substeps = 0;
  while (remaining != 0.0) {
    const double beta0 = norm2(psi);
    if (beta0 == 0.0) break;
    for (std::size_t i = 0; i < n; ++i) V[0][i] = psi[i] / beta0;

    Eigen::VectorXd alpha(m), beta(m);
    int k = m;
    bool breakdown = false;
    for (int j = 0; j < m; ++j) {
      H.apply(V[j], w);
      alpha[j] = dot(V[j], w).real();
      for (std::size_t i = 0; i < n; ++i) w[i] -= alpha[j] * V[j][i];
      if (j > 0) {
        for (std::size_t i = 0; i < n; ++i) w[i] -= beta[j - 1] * V[j - 1][i];
      }
      for (int pass = 0; pass < 2; ++pass) {
        for (int l = 0; l <= j; ++l) {
          const complex c = dot(V[l], w);
          for (std::size_t i = 0; i < n; ++i) w[i] -= c * V[l][i];
        }
      }
      beta[j] = norm2(w);
      if (beta[j] <= 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
        k = j + 1;
        breakdown = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / beta[j];
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    if (k == 1) {
      eig.compute(Eigen::MatrixXd::Constant(1, 1, alpha[0]));
    } else {
      Eigen::VectorXd diag = alpha.head(k);
      Eigen::VectorXd sub = beta.head(k - 1);
      eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    }
    const Eigen::MatrixXd& Q = eig.eigenvectors();
    const Eigen::VectorXd& lambda = eig.eigenvalues();

    Eigen::VectorXcd y(k);
    for (int halvings = 0;; ++halvings) {
      for (int r = 0; r < k; ++r) {
        complex s = 0.0;
        for (int c = 0; c < k; ++c) s += Q(r, c) * std::exp(complex(0.0, -tau * lambda[c])) * Q(0, c);
        y[r] = s;
      }
      const double err = breakdown ? 0.0 : beta[k - 1] * std::abs(y[k - 1]);
      if (err <= options.tolerance) break;
      if (halvings > 60) throw NumericalError("propagate: Krylov step size underflow");
      tau *= 0.5;
    }

    std::fill(psi.begin(), psi.end(), complex(0.0));
    for (int j = 0; j < k; ++j) {
      const complex c = beta0 * y[j];
      for (std::size_t i = 0; i < n; ++i) psi[i] += c * V[j][i];
    }
    if (std::abs(remaining - tau) <= 1e-14 * std::abs(dt)) {
      remaining = 0.0;
    } else {
      remaining -= tau;
      if (std::abs(tau) > std::abs(remaining)) tau = remaining;
    }
    if (++substeps > options.max_substeps) throw NumericalError("propagate: substep budget exhausted");
  }

  for (const auto& z : psi) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw NumericalError("propagate: non-finite state");
  }
  return {state.basis, std::move(psi), state.time + dt};
}

// ---------------------------------------------------------------------------

namespace {

std::vector<complex> species_amplitudes(const Field& f, const SpeciesBasis& basis) {
  const double sqrt_h = std::sqrt(f.grid.spacing());
  const int N = basis.particles();
  std::vector<complex> out(basis.size());
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const auto occ = basis.occupation(s);
    double log_mult = log_factorial(N);
    complex c = 1.0;
    for (int x = 0; x < basis.sites(); ++x) {
      if (occ[x] == 0) continue;
      log_mult -= log_factorial(occ[x]);
      c *= std::pow(sqrt_h * f[x], static_cast<int>(occ[x]));
    }
    out[s] = std::exp(0.5 * log_mult) * c;
  }
  return out;
}

}  // namespace

ManyBodyState product_state(const Field& u, const Field& v, std::shared_ptr<const TwoSpeciesBasis> basis) {
  if (!basis) throw std::invalid_argument("product_state: null basis");
  if (!(u.grid == basis->grid()) || !(v.grid == basis->grid())) {
    throw std::invalid_argument("product_state: orbital grid does not match the basis");
  }
  if (norm(u) == 0.0 || norm(v) == 0.0) throw std::invalid_argument("product_state: zero-norm orbital");
  const auto ca = species_amplitudes(u, basis->species_a());
  const auto cb = species_amplitudes(v, basis->species_b());
  ManyBodyState state{basis, std::vector<complex>(basis->size()), 0.0};
  for (std::size_t a = 0; a < ca.size(); ++a) {
    for (std::size_t b = 0; b < cb.size(); ++b) state.coefficients[basis->flat(a, b)] = ca[a] * cb[b];
  }
  const double nrm = state.norm();
  if (nrm == 0.0) throw std::invalid_argument("product_state: zero-norm product");
  for (auto& z : state.coefficients) z /= nrm;
  return state;
}

double manybody_energy(const Hamiltonian& H, const ManyBodyState& state) {
  const auto Hpsi = apply_hamiltonian(H, state);
  return dot(state.coefficients, Hpsi.coefficients).real() / (H.spec().n1 + H.spec().n2);
}

// ---------------------------------------------------------------------------

void write_state(std::ostream& out, const ManyBodyState& state) {
  if (!state.basis) throw std::invalid_argument("write_state: state has no basis");
  const auto& b = *state.basis;
  out << kStateMagic << '\n'
      << "M " << b.sites() << '\n'
      << "L " << format_double(b.grid().length()) << '\n'
      << "N1 " << b.n1() << '\n'
      << "N2 " << b.n2() << '\n'
      << "time " << format_double(state.time) << '\n'
      << "basis_order " << kBasisOrderTag << '\n'
      << "dim " << b.size() << '\n'
      << "end\n";
  detail::write_complex_le(out, state.coefficients);
}

ManyBodyState read_state(std::istream& in) {
  int m = 0, n1 = 0, n2 = 0;
  double length = 0.0, time = 0.0;
  std::size_t dim = 0;
  std::string order;
  detail::read_text_header(in, kStateMagic, [&](const std::string& key, const std::string& value) {
    if (key == "M") m = std::stoi(value);
    else if (key == "L") length = std::stod(value);
    else if (key == "N1") n1 = std::stoi(value);
    else if (key == "N2") n2 = std::stoi(value);
    else if (key == "time") time = std::stod(value);
    else if (key == "basis_order") order = value;
    else if (key == "dim") dim = std::stoull(value);
    else throw std::runtime_error("state header: unknown key '" + key + "'");
  });
  if (order != kBasisOrderTag) throw std::runtime_error("state header: unsupported basis order '" + order + "'");
  auto basis = build_basis(make_grid(1, m, length), n1, n2, std::numeric_limits<std::size_t>::max());
  if (basis->size() != dim) throw std::runtime_error("state header: dimension does not match the basis");
  return {basis, detail::read_complex_le(in, dim), time};
}

void save_state(const std::string& path, const ManyBodyState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_state(out, state);
}

ManyBodyState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return read_state(in);
}

}  // namespace mixbec
