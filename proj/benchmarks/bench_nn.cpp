// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "diffinject/unet.hpp"

namespace {

using namespace diffinject;

Tensor random_image(int c, int side, Rng& rng) {
    Tensor x(c, side, side);
    for (auto& v : x.v) v = static_cast<float>(rng.uniform() * 2 - 1);
    return x;
}

void BM_Im2col3x3(benchmark::State& state) {
    Rng rng(1);
    const Tensor x = random_image(static_cast<int>(state.range(0)), 32, rng);
    for (auto _ : state) benchmark::DoNotOptimize(im2col3x3(x));
    state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(x.size()) * 9 *
                            sizeof(float));
}
BENCHMARK(BM_Im2col3x3)->Arg(3)->Arg(16)->Arg(64);

void BM_Conv3x3Forward(benchmark::State& state) {
    Rng rng(2);
    const int c = static_cast<int>(state.range(0));
    Conv3x3 conv(c, c, rng);
    const Tensor x = random_image(c, 32, rng);
    for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_Conv3x3Forward)->Arg(16)->Arg(64);

void BM_DenoiserForward(benchmark::State& state) {
    DenoiserConfig cfg;
    cfg.width = static_cast<int>(state.range(0));
    Denoiser model(cfg);
    Rng rng(3);
    const Tensor x = random_image(cfg.channels, cfg.image_size, rng);
    int t = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(x, t));
        t = t % 100 + 1;
    }
}
BENCHMARK(BM_DenoiserForward)->Arg(8)->Arg(16);

void BM_DenoiserTrainStep(benchmark::State& state) {
    DenoiserConfig cfg;
    Denoiser model(cfg);
    Adam opt;
    Rng rng(4);
    const Tensor x = random_image(cfg.channels, cfg.image_size, rng);
    for (auto _ : state) {
        const Tensor out = model.forward(x, 10);
        Tensor d = out; // pretend the target is zero: dL/dout = 2*out/n
        for (auto& v : d.v) v *= 2.f / static_cast<float>(d.size());
        model.backward(d);
        opt.step(model.params());
        zero_grads(model.params());
    }
}
BENCHMARK(BM_DenoiserTrainStep);

} // namespace
