#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "mixbec/effective.hpp"
#include "mixbec/indicators.hpp"
#include "mixbec/manybody.hpp"
#include "mixbec/scattering.hpp"

using namespace mixbec;

namespace {

Field gaussian(const Grid& g, double center) {
  Field f = sample_field(g, [=](const std::array<double, 3>& x) { return complex(std::exp(-(x[0] - center) * (x[0] - center))); });
  normalize(f);
  return f;
}

HamiltonianSpec spec(int n) {
  HamiltonianSpec s;
  s.n1 = n;
  s.n2 = n;
  s.V1 = [](double r) { return 0.5 * std::exp(-r * r); };
  s.V2 = s.V1;
  s.V12 = [](double r) { return 2.0 * std::exp(-r * r / 2.25); };
  return s;
}

void BM_HamiltonianApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto basis = build_basis(make_grid(1, 10, 8.0), n, n);
  const Hamiltonian H(spec(n), basis);
  std::vector<complex> in(H.size(), complex(1.0)), out(H.size());
  for (auto _ : state) {
    H.apply(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(H.size()));
}
BENCHMARK(BM_HamiltonianApply)->Arg(1)->Arg(2)->Arg(3);

void BM_KrylovStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid g = make_grid(1, 10, 8.0);
  const auto basis = build_basis(g, n, n);
  const Hamiltonian H(spec(n), basis);
  auto psi = product_state(gaussian(g, -1.0), gaussian(g, 1.0), basis);
  for (auto _ : state) psi = propagate(H, psi, 0.05);
}
BENCHMARK(BM_KrylovStep)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SplitStepHartree(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const Grid g = make_grid(1, m, 20.0);
  const auto coupling = hartree_spec(sample_displacement(g, [](double r) { return std::exp(-r * r); }),
                                     sample_displacement(g, [](double r) { return std::exp(-r * r); }),
                                     sample_displacement(g, [](double r) { return 1.0 / (1.0 + r * r); }), 0.5);
  const SplitStepIntegrator integrator(g, coupling);
  OrbitalState s{{gaussian(g, -1.0), gaussian(g, 1.0)}, 0.0};
  for (auto _ : state) s = integrator.step(s, 1e-3);
}
BENCHMARK(BM_SplitStepHartree)->Arg(64)->Arg(256)->Arg(1024);

void BM_SplitStepGp3D(benchmark::State& state) {
  const Grid g = make_grid(3, static_cast<int>(state.range(0)), 10.0);
  const SplitStepIntegrator integrator(g, gp_spec(0.01, 0.01, 0.005, 0.5));
  OrbitalState s{{gaussian(g, -1.0), gaussian(g, 1.0)}, 0.0};
  for (auto _ : state) s = integrator.step(s, 1e-3);
}
BENCHMARK(BM_SplitStepGp3D)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ScatteringLength(benchmark::State& state) {
  const auto V = RadialPotential::square_barrier(2.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(scattering_length(V, 4.0).scattering_length);
}
BENCHMARK(BM_ScatteringLength)->Unit(benchmark::kMillisecond);

void BM_Indicators(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid g = make_grid(1, 10, 8.0);
  const auto basis = build_basis(g, n, n);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  ManyBodyState psi{basis, std::vector<complex>(basis->size()), 0.0};
  for (auto& z : psi.coefficients) z = {d(rng), d(rng)};
  const Field u = gaussian(g, -1.0), v = gaussian(g, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(alpha_11(psi, u, v));
    benchmark::DoNotOptimize(derivative_decomposition(psi, u, v, spec(n)).total());
  }
}
BENCHMARK(BM_Indicators)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
