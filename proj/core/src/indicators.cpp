#include "mixbec/indicators.hpp"

#include <cmath>
#include <stdexcept>

namespace mixbec {
namespace detail {

// a_x on one species: |n> -> sqrt(n_x) |n - e_x>.
struct LadderTables {
  struct Entry {
    int site;
    std::uint32_t target;
    double amplitude;
  };

  SpeciesBasis upper;
  SpeciesBasis lower;
  std::vector<std::size_t> offsets;
  std::vector<Entry> entries;

  explicit LadderTables(const SpeciesBasis& basis) : upper(basis), lower(basis.sites(), basis.particles() - 1) {
    std::vector<std::uint16_t> occ(basis.sites());
    offsets.push_back(0);
    for (std::size_t s = 0; s < upper.size(); ++s) {
      const auto src = upper.occupation(s);
      for (int x = 0; x < upper.sites(); ++x) {
        if (src[x] == 0) continue;
        std::copy(src.begin(), src.end(), occ.begin());
        --occ[x];
        entries.push_back({x, static_cast<std::uint32_t>(lower.index(occ)), std::sqrt(static_cast<double>(src[x]))});
      }
      offsets.push_back(entries.size());
    }
  }
};

}  // namespace detail

namespace {

using detail::LadderTables;
using Vec = std::vector<complex>;

// Layout of a two-species coefficient array: species A index varies slowest.
struct Shape {
  std::size_t a;
  std::size_t b;
};

// sum_x c_x a_x on the chosen species; `in` has the shape of the upper sector.
Vec lower(const LadderTables& L, Species sp, Shape in_shape, std::span<const complex> c, const Vec& in) {
  if (sp == Species::a) {
    const std::size_t nb = in_shape.b;
    Vec out(L.lower.size() * nb);
    for (std::size_t s = 0; s < L.upper.size(); ++s) {
      for (std::size_t k = L.offsets[s]; k < L.offsets[s + 1]; ++k) {
        const auto& e = L.entries[k];
        const complex w = c[e.site] * e.amplitude;
        if (w == 0.0) continue;
        complex* dst = out.data() + e.target * nb;
        const complex* src = in.data() + s * nb;
        for (std::size_t b = 0; b < nb; ++b) dst[b] += w * src[b];
      }
    }
    return out;
  }
  const std::size_t na = in_shape.a;
  const std::size_t nb_in = L.upper.size();
  const std::size_t nb_out = L.lower.size();
  Vec out(na * nb_out);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t s = 0; s < nb_in; ++s) {
      const complex src = in[a * nb_in + s];
      if (src == 0.0) continue;
      for (std::size_t k = L.offsets[s]; k < L.offsets[s + 1]; ++k) {
        const auto& e = L.entries[k];
        out[a * nb_out + e.target] += c[e.site] * e.amplitude * src;
      }
    }
  }
  return out;
}

// sum_x c_x a_x^dagger; `in` has the shape of the lower sector.
Vec raise(const LadderTables& L, Species sp, Shape out_shape, std::span<const complex> c, const Vec& in) {
  Vec out(out_shape.a * out_shape.b);
  if (sp == Species::a) {
    const std::size_t nb = out_shape.b;
    for (std::size_t s = 0; s < L.upper.size(); ++s) {
      for (std::size_t k = L.offsets[s]; k < L.offsets[s + 1]; ++k) {
        const auto& e = L.entries[k];
        const complex w = c[e.site] * e.amplitude;
        if (w == 0.0) continue;
        complex* dst = out.data() + s * nb;
        const complex* src = in.data() + e.target * nb;
        for (std::size_t b = 0; b < nb; ++b) dst[b] += w * src[b];
      }
    }
    return out;
  }
  const std::size_t nb_out = L.upper.size();
  const std::size_t nb_in = L.lower.size();
  for (std::size_t a = 0; a < out_shape.a; ++a) {
    for (std::size_t s = 0; s < nb_out; ++s) {
      complex acc = 0.0;
      for (std::size_t k = L.offsets[s]; k < L.offsets[s + 1]; ++k) {
        const auto& e = L.entries[k];
        acc += c[e.site] * e.amplitude * in[a * nb_in + e.target];
      }
      out[a * nb_out + s] = acc;
    }
  }
  return out;
}

complex dot(const Vec& a, const Vec& b) {
  complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm_sq(const Vec& a) {
  double s = 0.0;
  for (const auto& z : a) s += std::norm(z);
  return s;
}

std::vector<complex> to_std(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<complex> unit(int m, int x) {
  std::vector<complex> e(m, 0.0);
  e[x] = 1.0;
  return e;
}

Shape shape_of(const TwoSpeciesBasis& basis) { return {basis.species_a().size(), basis.species_b().size()}; }

void require_state(const ManyBodyState& state, const char* where) {
  if (!state.basis) throw std::invalid_argument(std::string(where) + ": state has no basis");
  if (state.coefficients.size() != state.basis->size()) {
    throw std::invalid_argument(std::string(where) + ": coefficient count does not match the basis");
  }
}

void require_orbital(const Field& f, const TwoSpeciesBasis& basis, const char* where) {
  if (!(f.grid == basis.grid())) throw std::invalid_argument(std::string(where) + ": orbital grid does not match");
}

// ||a(u) Psi||^2 with a(u) = sum_x conj(u_x) a_x.
double condensate_overlap(const ManyBodyState& state, const Field& orbital, Species sp) {
  const auto& basis = *state.basis;
  const LadderTables L(sp == Species::a ? basis.species_a() : basis.species_b());
  const auto u = site_vector(orbital);
  const auto c = to_std(u.conjugate());
  return norm_sq(lower(L, sp, shape_of(basis), c, state.coefficients));
}

double pair_value(const std::function<double(double)>& f, const Grid& grid, int x, int y) {
  if (!f) return 0.0;
  const int m = grid.points();
  return f(std::abs(grid.displacement(((x - y) % m + m) % m)));
}

// (V * |f|^2)(x) = h sum_y V(x - y) |f(y)|^2.
std::vector<double> dressed(const std::function<double(double)>& V, const Field& f) {
  const Grid& g = f.grid;
  const int m = g.points();
  std::vector<double> out(m, 0.0);
  if (!V) return out;
  for (int x = 0; x < m; ++x) {
    double s = 0.0;
    for (int y = 0; y < m; ++y) s += pair_value(V, g, x, y) * std::norm(f[y]);
    out[x] = s * g.spacing();
  }
  return out;
}

// ---------------------------------------------------------------------------
// First-quantized embedding: slots x1..xN1 then y1..yN2, slot 0 slowest.

struct FirstQuantized {
  int sites;
  int n1;
  int n2;
  std::size_t size;
  std::vector<std::size_t> stride;

  FirstQuantized(int m, int a, int b) : sites(m), n1(a), n2(b), size(1), stride(a + b) {
    const double total = std::pow(static_cast<double>(m), a + b);
    if (total > 4e6) throw std::length_error("first-quantized embedding too large");
    for (int s = a + b - 1; s >= 0; --s) {
      stride[s] = size;
      size *= m;
    }
  }

  int site(std::size_t flat, int slot) const { return static_cast<int>((flat / stride[slot]) % sites); }
};

double log_factorial(int n) { return std::lgamma(n + 1.0); }

Vec embed(const TwoSpeciesBasis& basis, const Vec& coefficients, const FirstQuantized& fq) {
  const int m = basis.sites();
  Vec out(fq.size);
  std::vector<std::uint16_t> na(m), nb(m);
  for (std::size_t i = 0; i < fq.size; ++i) {
    std::fill(na.begin(), na.end(), 0);
    std::fill(nb.begin(), nb.end(), 0);
    for (int s = 0; s < fq.n1; ++s) ++na[fq.site(i, s)];
    for (int s = 0; s < fq.n2; ++s) ++nb[fq.site(i, fq.n1 + s)];
    double log_w = -log_factorial(fq.n1) - log_factorial(fq.n2);
    for (int x = 0; x < m; ++x) log_w += log_factorial(na[x]) + log_factorial(nb[x]);
    const std::size_t idx = basis.flat(basis.species_a().index(na), basis.species_b().index(nb));
    out[i] = coefficients[idx] * std::exp(0.5 * log_w);
  }
  return out;
}

// |f><f| on one slot.
Vec project_slot(const FirstQuantized& fq, int slot, const Eigen::VectorXcd& f, const Vec& in) {
  Vec out(fq.size);
  const std::size_t st = fq.stride[slot];
  const std::size_t block = st * fq.sites;
  for (std::size_t base = 0; base < fq.size; base += block) {
    for (std::size_t r = 0; r < st; ++r) {
      complex overlap = 0.0;
      for (int x = 0; x < fq.sites; ++x) overlap += std::conj(f[x]) * in[base + x * st + r];
      for (int x = 0; x < fq.sites; ++x) out[base + x * st + r] = f[x] * overlap;
    }
  }
  return out;
}

Vec complement_slot(const FirstQuantized& fq, int slot, const Eigen::VectorXcd& f, const Vec& in) {
  Vec out = project_slot(fq, slot, f, in);
  for (std::size_t i = 0; i < fq.size; ++i) out[i] = in[i] - out[i];
  return out;
}

// sum_k p_k^A sum_l p_l^B / (N1 N2) on an arbitrary first-quantized vector.
Vec apply_s(const FirstQuantized& fq, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v, const Vec& in) {
  Vec a(fq.size);
  for (int s = 0; s < fq.n1; ++s) {
    const Vec t = project_slot(fq, s, u, in);
    for (std::size_t i = 0; i < fq.size; ++i) a[i] += t[i];
  }
  Vec out(fq.size);
  for (int s = 0; s < fq.n2; ++s) {
    const Vec t = project_slot(fq, fq.n1 + s, v, a);
    for (std::size_t i = 0; i < fq.size; ++i) out[i] += t[i];
  }
  const double scale = 1.0 / (static_cast<double>(fq.n1) * fq.n2);
  for (auto& z : out) z *= scale;
  return out;
}

int label_index(const std::string& label) {
  for (int i = 0; i < 4; ++i) {
    if (label == LambdaOmegaTable::labels[i]) return i;
  }
  throw std::invalid_argument("LambdaOmegaTable: unknown label '" + label + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

Eigen::VectorXcd site_vector(const Field& u) {
  if (u.grid.dim() != 1) throw std::invalid_argument("site_vector: one-dimensional orbitals only");
  Eigen::VectorXcd out(u.size());
  const double s = std::sqrt(u.grid.spacing());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = s * u[i];
  return out;
}

ReducedDensity reduce(const ManyBodyState& state, MarginalKind kind) {
  require_state(state, "reduce");
  const auto& basis = *state.basis;
  const int m = basis.sites();
  const double n1 = basis.n1();
  const double n2 = basis.n2();
  const Shape shape = shape_of(basis);
  const LadderTables La(basis.species_a());
  const LadderTables Lb(basis.species_b());

  ReducedDensity out;
  out.kind = kind;
  out.n1 = basis.n1();
  out.n2 = basis.n2();
  out.time = state.time;

  std::vector<Vec> columns;
  double scale = 1.0;
  if (kind == MarginalKind::species_a) {
    for (int x = 0; x < m; ++x) columns.push_back(lower(La, Species::a, shape, unit(m, x), state.coefficients));
    scale = 1.0 / n1;
  } else if (kind == MarginalKind::species_b) {
    for (int y = 0; y < m; ++y) columns.push_back(lower(Lb, Species::b, shape, unit(m, y), state.coefficients));
    scale = 1.0 / n2;
  } else {
    const Shape mid{La.lower.size(), shape.b};
    for (int x = 0; x < m; ++x) {
      const Vec fx = lower(La, Species::a, shape, unit(m, x), state.coefficients);
      for (int y = 0; y < m; ++y) columns.push_back(lower(Lb, Species::b, mid, unit(m, y), fx));
    }
    scale = 1.0 / (n1 * n2);
  }

  const auto d = static_cast<Eigen::Index>(columns.size());
  const auto len = static_cast<Eigen::Index>(columns.front().size());
  Eigen::MatrixXcd F(len, d);
  for (Eigen::Index j = 0; j < d; ++j) F.col(j) = Eigen::Map<const Eigen::VectorXcd>(columns[j].data(), len);
  // gamma_{x x'} = <a_{x'} Psi, a_x Psi> / N.
  out.matrix = (F.adjoint() * F).transpose() * scale;
  return out;
}

double alpha_11(const ManyBodyState& state, const Field& u, const Field& v) {
  require_state(state, "alpha_11");
  const auto& basis = *state.basis;
  require_orbital(u, basis, "alpha_11");
  require_orbital(v, basis, "alpha_11");
  const LadderTables La(basis.species_a());
  const LadderTables Lb(basis.species_b());
  const auto cu = to_std(site_vector(u).conjugate());
  const auto cv = to_std(site_vector(v).conjugate());
  const Vec au = lower(La, Species::a, shape_of(basis), cu, state.coefficients);
  const Vec abv = lower(Lb, Species::b, {La.lower.size(), basis.species_b().size()}, cv, au);
  return 1.0 - norm_sq(abv) / (static_cast<double>(basis.n1()) * basis.n2());
}

double alpha_10(const ManyBodyState& state, const Field& u) {
  require_state(state, "alpha_10");
  require_orbital(u, *state.basis, "alpha_10");
  return 1.0 - condensate_overlap(state, u, Species::a) / state.basis->n1();
}

double alpha_01(const ManyBodyState& state, const Field& v) {
  require_state(state, "alpha_01");
  require_orbital(v, *state.basis, "alpha_01");
  return 1.0 - condensate_overlap(state, v, Species::b) / state.basis->n2();
}

double trace_distance(const ReducedDensity& gamma, const Field& u, const Field& v) {
  Eigen::VectorXcd phi;
  switch (gamma.kind) {
    case MarginalKind::species_a: phi = site_vector(u); break;
    case MarginalKind::species_b: phi = site_vector(v); break;
    case MarginalKind::pair: {
      const auto su = site_vector(u);
      const auto sv = site_vector(v);
      phi.resize(su.size() * sv.size());
      for (Eigen::Index x = 0; x < su.size(); ++x) {
        for (Eigen::Index y = 0; y < sv.size(); ++y) phi[x * sv.size() + y] = su[x] * sv[y];
      }
      break;
    }
  }
  if (phi.size() != gamma.matrix.rows()) throw std::invalid_argument("trace_distance: dimension mismatch");
  const Eigen::MatrixXcd diff = gamma.matrix - phi * phi.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(diff, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().sum();
}

MarginalBounds marginal_bounds_check(const ManyBodyState& state, const Field& u, const Field& v, double slack) {
  MarginalBounds out;
  const double a10 = alpha_10(state, u);
  const double a01 = alpha_01(state, v);
  out.lhs_max = std::max(a10, a01);
  out.middle = alpha_11(state, u, v);
  out.rhs_sum = a10 + a01;
  out.lower_holds = out.middle - out.lhs_max >= -slack;
  out.upper_holds = out.rhs_sum - out.middle >= -slack;
  return out;
}

// ---------------------------------------------------------------------------

double WeightFunction::operator()(int k) const {
  if (k < 0) throw std::out_of_range("WeightFunction: negative excitation number");
  const double N = particles;
  switch (kind) {
    case Kind::s: return k / N;
    case Kind::n: return std::sqrt(k / N);
    case Kind::m:
      if (k >= std::pow(N, 1.0 - 2.0 * xi)) return std::sqrt(k / N);
      return 0.5 * (std::pow(N, -1.0 + xi) * k + std::pow(N, -xi));
    case Kind::custom:
      if (static_cast<std::size_t>(k) >= table.size()) {
        throw std::out_of_range("WeightFunction: custom weight undefined at k = " + std::to_string(k));
      }
      return table[k];
  }
  return 0.0;
}

std::vector<double> WeightFunction::values() const {
  std::vector<double> out(particles + 1);
  for (int k = 0; k <= particles; ++k) out[k] = (*this)(k);
  return out;
}

std::string WeightFunction::name() const {
  switch (kind) {
    case Kind::s: return "s";
    case Kind::n: return "n";
    case Kind::m: return "m";
    case Kind::custom: return "custom";
  }
  return "unknown";
}

namespace {
void check_particles(int n) {
  if (n < 1) throw std::invalid_argument("weight: particle number must be >= 1");
}
}  // namespace

WeightFunction weight_s(int particles) {
  check_particles(particles);
  return {WeightFunction::Kind::s, particles, 0.0, {}};
}

WeightFunction weight_n(int particles) {
  check_particles(particles);
  return {WeightFunction::Kind::n, particles, 0.0, {}};
}

WeightFunction weight_m(int particles, double xi) {
  check_particles(particles);
  if (!(xi > 0.0)) throw std::invalid_argument("weight_m: xi must be positive");
  return {WeightFunction::Kind::m, particles, xi, {}};
}

WeightFunction weight_custom(std::vector<double> values) {
  if (values.size() < 2) throw std::invalid_argument("weight_custom: need values for k = 0..N with N >= 1");
  for (double g : values) {
    if (!(g >= 0.0)) throw std::invalid_argument("weight_custom: values must be nonnegative");
  }
  const int n = static_cast<int>(values.size()) - 1;
  return {WeightFunction::Kind::custom, n, 0.0, std::move(values)};
}

// ---------------------------------------------------------------------------

CountingProjectorSet::CountingProjectorSet(std::shared_ptr<const TwoSpeciesBasis> basis, const Field& orbital,
                                           Species species)
    : basis_(std::move(basis)), species_(species) {
  if (!basis_) throw std::invalid_argument("CountingProjectorSet: null basis");
  require_orbital(orbital, *basis_, "CountingProjectorSet");
  orbital_ = site_vector(orbital);
  const double n = orbital_.norm();
  if (std::abs(n - 1.0) > 1e-10) throw std::invalid_argument("CountingProjectorSet: orbital must be normalized");
  orbital_ /= n;
  const auto& sb = species == Species::a ? basis_->species_a() : basis_->species_b();
  particles_ = sb.particles();
  ladder_ = std::make_shared<const detail::LadderTables>(sb);
}

std::vector<complex> CountingProjectorSet::apply_condensate_number(const std::vector<complex>& psi) const {
  if (psi.size() != basis_->size()) throw std::invalid_argument("CountingProjectorSet: state size mismatch");
  const Shape shape = shape_of(*basis_);
  const auto c = to_std(orbital_.conjugate());
  const auto d = to_std(orbital_);
  return raise(*ladder_, species_, shape, d, lower(*ladder_, species_, shape, c, psi));
}

std::vector<complex> CountingProjectorSet::apply_q(const std::vector<complex>& psi) const {
  Vec out = apply_condensate_number(psi);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(particles_) * psi[i] - out[i];
  return out;
}

std::vector<complex> CountingProjectorSet::project(int k, const std::vector<complex>& psi) const {
  if (k < 0 || k > particles_) return Vec(psi.size(), 0.0);
  Vec out = psi;
  for (int j = 0; j <= particles_; ++j) {
    if (j == k) continue;
    const Vec q = apply_q(out);
    const double denom = static_cast<double>(k - j);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (q[i] - static_cast<double>(j) * out[i]) / denom;
  }
  return out;
}

std::vector<double> CountingProjectorSet::distribution(const std::vector<complex>& psi) const {
  std::vector<double> out(particles_ + 1);
  for (int k = 0; k <= particles_; ++k) out[k] = norm_sq(project(k, psi));
  return out;
}

std::vector<complex> CountingProjectorSet::apply_weight(const WeightFunction& g, const std::vector<complex>& psi,
                                                        int shift) const {
  Vec out(psi.size(), 0.0);
  for (int k = 0; k <= particles_; ++k) {
    const double w = g(k + shift);
    if (w == 0.0) continue;
    const Vec pk = project(k, psi);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * pk[i];
  }
  return out;
}

CountingProjectorSet counting_projectors(std::shared_ptr<const TwoSpeciesBasis> basis, const Field& orbital,
                                         Species species) {
  return CountingProjectorSet(std::move(basis), orbital, species);
}

double weight_expectation(const ManyBodyState& state, const WeightFunction& g, const CountingProjectorSet& projectors) {
  require_state(state, "weight_expectation");
  const auto dist = projectors.distribution(state.coefficients);
  double s = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) s += g(static_cast<int>(k)) * dist[k];
  return s;
}

// ---------------------------------------------------------------------------

DerivativeTerms derivative_decomposition(const ManyBodyState& state, const Field& u, const Field& v,
                                         const HamiltonianSpec& spec) {
  require_state(state, "derivative_decomposition");
  const auto& basis = *state.basis;
  require_orbital(u, basis, "derivative_decomposition");
  require_orbital(v, basis, "derivative_decomposition");
  if (spec.scaling != Scaling::mean_field) {
    throw std::invalid_argument("derivative_decomposition: mean-field Hamiltonians only");
  }
  if (spec.n1 != basis.n1() || spec.n2 != basis.n2()) {
    throw std::invalid_argument("derivative_decomposition: particle numbers do not match the state");
  }
  const Grid& grid = basis.grid();
  const int m = grid.points();
  const double n1 = basis.n1();
  const double n2 = basis.n2();
  const double c1 = spec.c1();
  const double c2 = spec.c2();

  const auto v1u = dressed(spec.V1, u);
  const auto v2v = dressed(spec.V2, v);
  const auto v12u = dressed(spec.V12, u);
  const auto v12v = dressed(spec.V12, v);

  const auto& A = basis.species_a();
  const auto& B = basis.species_b();
  const auto same = [&](std::span<const std::uint16_t> n, const std::function<double(double)>& V,
                        const std::vector<double>& mf, double N) {
    double pair = 0.0, one = 0.0;
    for (int x = 0; x < m; ++x) {
      if (n[x] == 0) continue;
      for (int y = 0; y < m; ++y) pair += 0.5 * n[x] * n[y] * pair_value(V, grid, x, y);
      pair -= 0.5 * n[x] * pair_value(V, grid, x, x);
      one += n[x] * mf[x];
    }
    return pair / N - one;
  };

  std::vector<double> wa(A.size()), wb(B.size()), cross_a(A.size()), cross_b(B.size());
  for (std::size_t a = 0; a < A.size(); ++a) {
    const auto n = A.occupation(a);
    wa[a] = same(n, spec.V1, v1u, n1);
    double s = 0.0;
    for (int x = 0; x < m; ++x) s += n[x] * v12v[x];
    cross_a[a] = c2 * s;
  }
  for (std::size_t b = 0; b < B.size(); ++b) {
    const auto n = B.occupation(b);
    wb[b] = same(n, spec.V2, v2v, n2);
    double s = 0.0;
    for (int y = 0; y < m; ++y) s += n[y] * v12u[y];
    cross_b[b] = c1 * s;
  }

  // X Psi with X = 1 - n_u n_v / (N1 N2).
  const auto pa = counting_projectors(state.basis, u, Species::a);
  const auto pb = counting_projectors(state.basis, v, Species::b);
  const Vec& psi = state.coefficients;
  Vec x = pb.apply_condensate_number(pa.apply_condensate_number(psi));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = psi[i] - x[i] / (n1 * n2);

  Vec w1(psi.size()), w2(psi.size()), w12(psi.size());
  for (std::size_t a = 0; a < A.size(); ++a) {
    const auto na = A.occupation(a);
    for (std::size_t b = 0; b < B.size(); ++b) {
      const auto nb = B.occupation(b);
      const std::size_t i = basis.flat(a, b);
      double pair = 0.0;
      if (spec.V12) {
        for (int xa = 0; xa < m; ++xa) {
          if (na[xa] == 0) continue;
          for (int yb = 0; yb < m; ++yb) pair += na[xa] * nb[yb] * pair_value(spec.V12, grid, xa, yb);
        }
      }
      w1[i] = wa[a] * psi[i];
      w2[i] = wb[b] * psi[i];
      w12[i] = (pair / (n1 + n2) - cross_a[a] - cross_b[b]) * psi[i];
    }
  }
  const auto commutator = [&](const Vec& wpsi) { return dot(wpsi, x) - dot(x, wpsi); };
  return {commutator(w1), commutator(w2), commutator(w12)};
}

// ---------------------------------------------------------------------------

complex LambdaOmegaTable::at(const std::string& left, const std::string& right) const {
  return terms[label_index(left)][label_index(right)];
}

complex LambdaOmegaTable::sum() const {
  complex s = 0.0;
  for (const auto& row : terms) {
    for (const auto& t : row) s += t;
  }
  return s;
}

complex LambdaOmegaTable::lambda() const {
  return at("pp", "pp") + at("pq", "pq") + at("qp", "qp") + at("qq", "qq") + at("pq", "qp") + at("qp", "pq");
}

complex LambdaOmegaTable::omega() const { return sum() - lambda(); }

LambdaOmegaTable lambda_omega_terms(const ManyBodyState& state, const Field& u, const Field& v,
                                    const std::function<double(double)>& V12) {
  require_state(state, "lambda_omega_terms");
  const auto& basis = *state.basis;
  require_orbital(u, basis, "lambda_omega_terms");
  require_orbital(v, basis, "lambda_omega_terms");
  const Grid& grid = basis.grid();
  const FirstQuantized fq(basis.sites(), basis.n1(), basis.n2());
  const auto su = site_vector(u);
  const auto sv = site_vector(v);
  const Vec phi = embed(basis, state.coefficients, fq);

  const auto v12u = dressed(V12, u);
  const auto v12v = dressed(V12, v);
  const int ya = fq.n1;
  std::vector<double> z(fq.size);
  for (std::size_t i = 0; i < fq.size; ++i) {
    const int x1 = fq.site(i, 0);
    const int y1 = fq.site(i, ya);
    z[i] = pair_value(V12, grid, x1, y1) - v12v[x1] - v12u[y1];
  }
  const auto apply_z = [&](const Vec& in) {
    Vec out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = z[i] * in[i];
    return out;
  };

  std::array<Vec, 4> sides;
  for (int k = 0; k < 4; ++k) {
    const bool qa = k & 2;
    const bool qb = k & 1;
    Vec t = qa ? complement_slot(fq, 0, su, phi) : project_slot(fq, 0, su, phi);
    sides[k] = qb ? complement_slot(fq, ya, sv, t) : project_slot(fq, ya, sv, t);
  }
  std::array<Vec, 4> z_sides, s_sides;
  for (int k = 0; k < 4; ++k) {
    z_sides[k] = apply_z(sides[k]);
    s_sides[k] = apply_s(fq, su, sv, sides[k]);
  }

  LambdaOmegaTable table;
  for (int l = 0; l < 4; ++l) {
    for (int r = 0; r < 4; ++r) table.terms[l][r] = dot(z_sides[l], s_sides[r]) - dot(s_sides[l], z_sides[r]);
  }
  const Vec zphi = apply_z(phi);
  const Vec sphi = apply_s(fq, su, sv, phi);
  table.commutator = dot(zphi, sphi) - dot(sphi, zphi);
  return table;
}

// ---------------------------------------------------------------------------

double alpha_m_less(const ManyBodyState& state, const Field& orbital, Species species, const CorrectionInputs& in) {
  const auto projectors = counting_projectors(state.basis, orbital, species);
  return weight_expectation(state, in.weight, projectors) + std::abs(in.manybody_energy - in.effective_energy);
}

double corrected_alpha(const ManyBodyState& state, const Field& u, const Field& v, Species species,
                       const CorrectionInputs& in) {
  require_state(state, "corrected_alpha");
  const auto& basis = *state.basis;
  const Field& own = species == Species::a ? u : v;
  const double base = alpha_m_less(state, own, species, in);
  const int n_own = species == Species::a ? basis.n1() : basis.n2();
  if (n_own < 2) return base;

  const auto projectors = counting_projectors(state.basis, own, species);
  const Vec& psi = state.coefficients;
  const Vec m0 = projectors.apply_weight(in.weight, psi, 0);
  const Vec m1 = projectors.apply_weight(in.weight, psi, 1);
  const Vec m2 = projectors.apply_weight(in.weight, psi, 2);
  Vec d1(psi.size()), d2(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    d1[i] = m0[i] - m1[i];
    d2[i] = m0[i] - m2[i];
  }

  const FirstQuantized fq(basis.sites(), basis.n1(), basis.n2());
  const Grid& grid = basis.grid();
  const int s1 = species == Species::a ? 0 : fq.n1;
  const int s2 = s1 + 1;
  const auto orb = site_vector(own);
  const Vec phi = embed(basis, psi, fq);
  const Vec e1 = embed(basis, d1, fq);
  const Vec e2 = embed(basis, d2, fq);

  // R Psi = p1 p2 D2 + (p1 q2 + q1 p2) D1.
  const Vec pp = project_slot(fq, s1, orb, project_slot(fq, s2, orb, e2));
  const Vec p1q2 = project_slot(fq, s1, orb, complement_slot(fq, s2, orb, e1));
  const Vec q1p2 = complement_slot(fq, s1, orb, project_slot(fq, s2, orb, e1));
  Vec r(fq.size);
  for (std::size_t i = 0; i < fq.size; ++i) r[i] = pp[i] + p1q2[i] + q1p2[i];

  double same = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < fq.size; ++i) {
    const complex w = std::conj(phi[i]) * r[i];
    same += pair_value(in.g_same, grid, fq.site(i, s1), fq.site(i, s2)) * w.real();
    cross += pair_value(in.g_cross, grid, fq.site(i, 0), fq.site(i, fq.n1)) * w.real();
  }
  const double n1 = basis.n1();
  const double n2 = basis.n2();
  const double n = n_own;
  return base - n * (n - 1.0) * same - n1 * n2 * cross;
}

}  // namespace mixbec
