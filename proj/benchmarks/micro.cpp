#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "spectralds/spectralds.hpp"

using namespace spectralds;

namespace {

const SpectralBasis& basis_for(std::size_t L, std::size_t k) {
  static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<SpectralBasis>> cache;
  auto& slot = cache[{L, k}];
  if (!slot) slot = std::make_unique<SpectralBasis>(compute_basis(HankelSpec{L}, k));
  return *slot;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng = make_stream(seed, "bench-vector");
  std::normal_distribution<double> normal;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = normal(rng);
  return v;
}

Sequence random_sequence(std::size_t T, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng = make_stream(seed, "bench-sequence");
  std::normal_distribution<double> normal;
  Sequence u(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
  return u;
}

StuParams random_params(std::size_t k, std::size_t n) {
  std::mt19937_64 rng = make_stream(3, "bench-params");
  std::normal_distribution<double> normal;
  StuParams p = StuParams::zeros(k, n, n);
  for (std::size_t j = 0; j < k; ++j)
    for (Matrix* m : {&p.m_plus[j], &p.m_minus[j]})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
  return p;
}

void BM_HankelMatvecDense(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const Vector v = random_vector(L, 1);
  for (auto _ : state) benchmark::DoNotOptimize(hankel_matvec_dense(HankelSpec{L}, v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HankelMatvecDense)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_HankelMatvecFft(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const Vector v = random_vector(L, 1);
  for (auto _ : state) benchmark::DoNotOptimize(hankel_matvec_fft(HankelSpec{L}, v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HankelMatvecFft)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

void BM_ProjectInputs(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const SpectralBasis& basis = basis_for(T, 24);
  const Sequence u = random_sequence(T, 4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(project_inputs(basis, u));
}
BENCHMARK(BM_ProjectInputs)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_RecurrentStep(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const SpectralBasis& basis = basis_for(1024, 24);
  AlphaSampler sampler(AlphaSamplerConfig{5});
  const DistilledFilters filters = spectral_to_lds(basis, h, sampler).filters;
  RecurrentStu model = distill_stu_model(random_params(24, 4), filters);
  Vector u = random_vector(4, 4), y(4);
  for (auto _ : state) {
    model.step(u.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_RecurrentStep)->Arg(50)->Arg(100)->Arg(400);

void BM_ConvolutionalForward(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const SpectralBasis& basis = basis_for(T, 24);
  const StuParams params = random_params(24, 4);
  const Sequence u = random_sequence(T, 4, 6);
  for (auto _ : state) benchmark::DoNotOptimize(forward_nonar(params, basis, u));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvolutionalForward)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
