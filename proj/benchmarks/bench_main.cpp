#include <benchmark/benchmark.h>

#include "mpfield/combinatorics.hpp"
#include "mpfield/field_sim.hpp"
#include "mpfield/moments.hpp"
#include "mpfield/volumes.hpp"

using namespace mpfield;

static void BM_EnumeratePartitions(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    for (auto _ : state) {
        std::size_t n = 0;
        for_each_partition(p, [&](std::span<const int>) { ++n; });
        benchmark::DoNotOptimize(n);
    }
}
BENCHMARK(BM_EnumeratePartitions)->DenseRange(6, 10, 2);

static void BM_ZetaKernel(benchmark::State& state) {
    const PartitionPath w({1, 2, 3, 1, 2, 3, 1, 2});
    const int M = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(zeta_count(w, M));
}
BENCHMARK(BM_ZetaKernel)->Arg(2)->Arg(4)->Arg(8);

static void BM_ZetaTransfer(benchmark::State& state) {
    const PartitionPath w({1, 2, 3, 1, 2, 3, 1, 2});
    const int M = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(zeta_count_transfer(w, M));
}
BENCHMARK(BM_ZetaTransfer)->Arg(2)->Arg(4)->Arg(8);

static void BM_VolumeExact(benchmark::State& state) {
    const PartitionPath w({1, 2, 1, 2, 1, 2, 1, 2});
    for (auto _ : state) benchmark::DoNotOptimize(volume_exact(w));
}
BENCHMARK(BM_VolumeExact);

// Private cache per call, so this measures the full expansion.
static void BM_MomentExpansion(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(moment_expansion(p));
}
BENCHMARK(BM_MomentExpansion)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

static void BM_SpectrumTrial(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int M = static_cast<int>(state.range(1));
    const auto inst = make_instance(d, M, 0.5, 7);
    for (auto _ : state) benchmark::DoNotOptimize(hermitian_eigenvalues(build_T(inst), inst));
}
BENCHMARK(BM_SpectrumTrial)->Args({1, 50})->Args({2, 5})->Args({3, 2})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
