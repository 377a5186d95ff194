#include <benchmark/benchmark.h>

#include <vector>

#include "incad/kernels.hpp"
#include "incad/random.hpp"

namespace {

using incad::Observation;
using incad::kernels::MixtureComponent;

struct Fixture {
  std::vector<Observation> points;
  std::vector<MixtureComponent> mixture;
  std::vector<double> out;
};

Fixture make_fixture(std::size_t n, int d, std::size_t k) {
  incad::RandomSource rng(7);
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) {
    Observation x(d);
    for (int j = 0; j < d; ++j) x(j) = 5.0 * rng.normal();
    f.points.push_back(std::move(x));
  }
  for (std::size_t c = 0; c < k; ++c) {
    incad::Vector mean(d);
    for (int j = 0; j < d; ++j) mean(j) = 5.0 * rng.normal();
    f.mixture.push_back({-std::log(static_cast<double>(k)),
                         incad::GaussianDensity({mean, incad::Matrix::Identity(d, d)})});
  }
  f.out.resize(n);
  return f;
}

void BM_DensitySerial(benchmark::State& state) {
  auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 2, static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    incad::kernels::mixture_log_density_serial(f.points, f.mixture, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DensityOpenMP(benchmark::State& state) {
  auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 2, static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    incad::kernels::mixture_log_density_openmp(f.points, f.mixture, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = incad::kernels::openmp_max_threads();
}

}  // namespace

BENCHMARK(BM_DensitySerial)->Args({400, 6})->Args({10000, 6})->Args({100000, 12});
BENCHMARK(BM_DensityOpenMP)->Args({400, 6})->Args({10000, 6})->Args({100000, 12});

BENCHMARK_MAIN();
