// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "diffinject/rng.hpp"
#include "diffinject/schedule.hpp"

namespace {

using namespace diffinject;

void BM_MakeSchedule(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(make_schedule(T, 1e-4, 0.02));
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_MakeSchedule)->Arg(100)->Arg(1000);

void BM_P2WeightSweep(benchmark::State& state) {
    const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
    const P2Config p2{1.0, 1.0};
    for (auto _ : state) {
        double acc = 0.0;
        for (int t = 1; t <= s.T; ++t) acc += p2_weight(s, p2, t);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * s.T);
}
BENCHMARK(BM_P2WeightSweep);

void BM_QSample(benchmark::State& state) {
    const NoiseSchedule s = make_schedule(100, 1e-4, 0.02);
    Rng rng(7);
    Tensor x0(3, 32, 32), eps(3, 32, 32);
    for (auto& v : x0.v) v = static_cast<float>(rng.uniform() * 2 - 1);
    for (auto& v : eps.v) v = static_cast<float>(rng.normal());
    for (auto _ : state) benchmark::DoNotOptimize(q_sample(x0, 50, eps, s));
    state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(x0.size()) * sizeof(float));
}
BENCHMARK(BM_QSample);

void BM_RngNormal(benchmark::State& state) {
    Rng rng(11);
    for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_RngNormal);

} // namespace

BENCHMARK_MAIN();
