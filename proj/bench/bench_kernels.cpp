#include <map>
#include <random>

#include <benchmark/benchmark.h>

#include "ttman/completion.hpp"
#include "ttman/kernels.hpp"

namespace {

using namespace ttman;

struct Fixture {
  BasePtr b;
  std::vector<Matrix> dv;
  SparseTensor z;
};

const Fixture& fixture(Index d) {
  static std::map<Index, Fixture> cache;
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  std::mt19937_64 rng(11);
  const Shape s = Shape::uniform_capped(d, 4, 5);
  Fixture f;
  f.b = make_base_point(random_tt(s, rng()));
  f.dv = to_param(random_tangent(f.b, rng), Param::first).cores();
  auto omega = std::make_shared<const IndexSet>(sample_indices(make_sampling_spec(s.n, uniform_distribution(4), 20000, rng()), s.n));
  f.z = observe(random_tt(s, rng()), omega);
  return cache.emplace(d, std::move(f)).first->second;
}

void BM_entries_serial(benchmark::State& st) {
  const Fixture& f = fixture(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::entries(f.b->x, f.z.omega()));
}
void BM_entries_omp(benchmark::State& st) {
  const Fixture& f = fixture(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::entries(f.b->x, f.z.omega()));
}
void BM_a_family_serial(benchmark::State& st) {
  const Fixture& f = fixture(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(kernels::serial::a_family(f.b->x, f.b->f.cores_tilde, f.z.omega(), f.z.values()));
}
void BM_a_family_omp(benchmark::State& st) {
  const Fixture& f = fixture(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(kernels::a_family(f.b->x, f.b->f.cores_tilde, f.z.omega(), f.z.values()));
}
void BM_three_products_serial(benchmark::State& st) {
  const Fixture& f = fixture(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(
        kernels::serial::three_products(f.b->x, f.b->f.cores_tilde, f.dv, f.z.omega(), f.z.values()));
}
void BM_three_products_omp(benchmark::State& st) {
  const Fixture& f = fixture(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(kernels::three_products(f.b->x, f.b->f.cores_tilde, f.dv, f.z.omega(), f.z.values()));
}

}  // namespace

BENCHMARK(BM_entries_serial)->Arg(10)->Arg(30);
BENCHMARK(BM_entries_omp)->Arg(10)->Arg(30);
BENCHMARK(BM_a_family_serial)->Arg(10)->Arg(30);
BENCHMARK(BM_a_family_omp)->Arg(10)->Arg(30);
BENCHMARK(BM_three_products_serial)->Arg(10)->Arg(30);
BENCHMARK(BM_three_products_omp)->Arg(10)->Arg(30);

BENCHMARK_MAIN();
