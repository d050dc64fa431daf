// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "diffinject/injector.hpp"

namespace {

using namespace diffinject;

std::vector<float> random_vec(int n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

void BM_Slerp(benchmark::State& state) {
    Rng rng(1);
    const int n = static_cast<int>(state.range(0));
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(slerp(a, b, 0.9));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Slerp)->Arg(256)->Arg(4096);

void BM_InjectH(benchmark::State& state) {
    Rng rng(2);
    Tensor h_orig(64, 8, 8), h_content(64, 8, 8), mask(1, 8, 8);
    for (auto& v : h_orig.v) v = static_cast<float>(rng.normal());
    for (auto& v : h_content.v) v = static_cast<float>(rng.normal());
    for (auto& v : mask.v) v = rng.uniform() < 0.5 ? 1.f : 0.f;
    const bool masked = state.range(0) != 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(inject_h(h_orig, h_content, 0.9, masked ? &mask : nullptr));
}
BENCHMARK(BM_InjectH)->Arg(0)->Arg(1);

void BM_PatchStatsDistance(benchmark::State& state) {
    Rng rng(3);
    Tensor a(3, 32, 32), b(3, 32, 32);
    for (auto& v : a.v) v = static_cast<float>(rng.uniform());
    for (auto& v : b.v) v = static_cast<float>(rng.uniform());
    for (auto _ : state) benchmark::DoNotOptimize(patch_stats_distance(a, b));
}
BENCHMARK(BM_PatchStatsDistance);

void BM_DdimInvert(benchmark::State& state) {
    DenoiserConfig cfg;
    cfg.width = 8;
    Denoiser model(cfg);
    const NoiseSchedule s = make_schedule(static_cast<int>(state.range(0)), 1e-4, 0.02);
    Rng rng(4);
    Tensor x0(3, 32, 32);
    for (auto& v : x0.v) v = static_cast<float>(rng.uniform() * 2 - 1);
    for (auto _ : state) benchmark::DoNotOptimize(ddim_invert(x0, model, s));
    state.SetItemsProcessed(state.iterations() * s.T);
}
BENCHMARK(BM_DdimInvert)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

} // namespace
