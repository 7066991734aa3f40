// Serial reference kernels against their OpenMP twins.

#include "mme/kernels.hpp"
#include "mme/rng.hpp"
#include "mme/synth.hpp"
#include "mme/trainer.hpp"
#include "mme/walk.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    mme::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        std::fill(c.begin(), c.end(), 0.0);
        if constexpr (Parallel)
            mme::kernels::gemm_nn_omp(a, b, c, n, n, n);
        else
            mme::kernels::gemm_nn(a, b, c, n, n, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/omp")->Arg(64)->Arg(256);

template <bool Parallel>
void BM_Distances(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = 64;
    const auto x = random_values(n * dim, 3);
    std::vector<double> d(n * n);
    for (auto _ : state) {
        if constexpr (Parallel)
            mme::kernels::pairwise_sq_distances_omp(x, d, n, dim);
        else
            mme::kernels::pairwise_sq_distances(x, d, n, dim);
        benchmark::DoNotOptimize(d.data());
    }
}
BENCHMARK(BM_Distances<false>)->Name("distances/serial")->Arg(128)->Arg(512);
BENCHMARK(BM_Distances<true>)->Name("distances/omp")->Arg(128)->Arg(512);

void BM_Walks(benchmark::State& state) {
    static const mme::Dataset data = mme::generate_classification_set(10, 4, 5);
    const auto mode = state.range(0) ? mme::Execution::parallel : mme::Execution::serial;
    for (auto _ : state) benchmark::DoNotOptimize(mme::extract_walks_batch(data.meshes, 32, 7, mode));
}
BENCHMARK(BM_Walks)->Name("walk_batch/serial")->Arg(0);
BENCHMARK(BM_Walks)->Name("walk_batch/omp")->Arg(1);

void BM_Evaluate(benchmark::State& state) {
    static const mme::Dataset data = mme::generate_classification_set(3, 8, 9);
    mme::GateConfig gate;
    gate.encoder_layers = gate.decoder_layers = 2;
    const mme::System system = mme::make_system({"walk_rnn", "face_mlp"}, 3, gate, 11);
    const auto mode = state.range(0) ? mme::Execution::parallel : mme::Execution::serial;
    for (auto _ : state) benchmark::DoNotOptimize(mme::evaluate(system, data.meshes, mme::Task::classification, 4, 3, mode));
}
BENCHMARK(BM_Evaluate)->Name("evaluate/serial")->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->Name("evaluate/omp")->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
