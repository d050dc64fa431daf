// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "diffinject/bias_bench.hpp"
#include "diffinject/diffusion.hpp"
#include "diffinject/errors.hpp"

using namespace diffinject;

namespace {
DiffusionConfig tiny_cfg() {
    DiffusionConfig c;
    c.timesteps = 20;
    c.width = 8;
    c.temb_dim = 16;
    c.train_steps = 150;
    c.batch_size = 4;
    c.learning_rate = 1e-3;
    c.seed = 13;
    return c;
}

Dataset tiny_dataset() {
    DatasetSpec s;
    s.num_classes = 3;
    s.num_bias_values = 3;
    s.image_size = 8;
    s.samples_per_class = 6;
    s.conflict_ratio = 0.0;
    s.seed = 3;
    return generate_dataset(s).first;
}
} // namespace

TEST_CASE("diffusion config validation") {
    DiffusionConfig c = tiny_cfg();
    c.timesteps = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_cfg();
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_cfg();
    c.beta_end = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("noise draws are deterministic per stream") {
    Rng a(99), b(99);
    const NoiseDraw da = draw_noise(3, 1, 4, 4, 10, a);
    const NoiseDraw db = draw_noise(3, 1, 4, 4, 10, b);
    REQUIRE(da.t.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(da.t[i] >= 1);
        CHECK(da.t[i] <= 10);
        CHECK(da.t[i] == db.t[i]);
        CHECK(max_abs_diff(da.eps[i], db.eps[i]) == 0.0);
    }
}

TEST_CASE("p2 loss terms match a brute-force recomputation") {
    const NoiseSchedule s = make_schedule(10, 1e-2, 0.1);
    const P2Config p2{1.0, 1.0};
    Rng rng(41);
    std::vector<Tensor> batch;
    for (int i = 0; i < 3; ++i) {
        Tensor x(1, 4, 4);
        for (auto& v : x.v) v = static_cast<float>(rng.uniform() * 2 - 1);
        batch.push_back(x);
    }
    Rng draw_rng(42);
    const NoiseDraw draw = draw_noise(3, 1, 4, 4, 10, draw_rng);

    // Model predicts half the true noise: residual is eps/2.
    const EpsModel model = [&](const Tensor&, int, int item) {
        Tensor out = draw.eps[item];
        for (auto& v : out.v) v *= 0.5f;
        return out;
    };
    const auto terms = p2_loss_terms(model, batch, draw, s, p2);
    REQUIRE(terms.size() == 3);
    for (int i = 0; i < 3; ++i) {
        double sq = 0;
        for (float v : draw.eps[i].v) sq += 0.25 * v * v;
        const double lam = p2_weight(s, p2, draw.t[i]);
        CHECK(terms[i] == doctest::Approx(lam * sq).epsilon(1e-6));
    }

    // Perfect model: zero loss.
    const EpsModel perfect = [&](const Tensor&, int, int item) { return draw.eps[item]; };
    for (double term : p2_loss_terms(perfect, batch, draw, s, p2)) CHECK(term == 0.0);
}

TEST_CASE("training decreases the loss and is reproducible") {
    const Dataset ds = tiny_dataset();
    const DiffusionConfig cfg = tiny_cfg();
    DiffusionTrainRecord ra, rb;
    Denoiser a = train_diffusion(ds, cfg, &ra);
    Denoiser b = train_diffusion(ds, cfg, &rb);
    REQUIRE(ra.step_loss.size() == 150);
    CHECK(ra.last_window_mean < ra.first_window_mean);
    for (std::size_t i = 0; i < ra.step_loss.size(); ++i) CHECK(ra.step_loss[i] == rb.step_loss[i]);

    // The two trained models agree exactly.
    Tensor x(3, 8, 8);
    for (std::size_t i = 0; i < x.size(); ++i) x.v[i] = 0.1f * static_cast<float>(i % 7) - 0.3f;
    CHECK(max_abs_diff(a.forward(x, 5), b.forward(x, 5)) == 0.0);
}

TEST_CASE("denoiser checkpoints restore the exact function") {
    const Dataset ds = tiny_dataset();
    DiffusionConfig cfg = tiny_cfg();
    cfg.train_steps = 10;
    Denoiser model = train_diffusion(ds, cfg);
    const auto p = std::filesystem::temp_directory_path() / "diffinject-denoiser.ckpt";
    save_denoiser(p, model, cfg);
    auto [back, cfg2] = load_denoiser(p);
    CHECK(cfg2.timesteps == cfg.timesteps);
    CHECK(cfg2.width == cfg.width);
    Tensor x(3, 8, 8);
    for (std::size_t i = 0; i < x.size(); ++i) x.v[i] = std::sin(static_cast<float>(i));
    CHECK(max_abs_diff(model.forward(x, 3), back.forward(x, 3)) == 0.0);
}
