// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/diffusion.hpp"

#include <cmath>

#include <json.hpp>

#include "diffinject/errors.hpp"

namespace diffinject {

void DiffusionConfig::validate() const {
    if (timesteps < 2) throw ConfigError("diffusion.timesteps must be >= 2");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("diffusion betas must satisfy 0 < beta_start <= beta_end < 1");
    if (gamma_p2 < 0.0) throw ConfigError("diffusion.gamma_p2 must be >= 0");
    if (!(k_p2 > 0.0)) throw ConfigError("diffusion.k_p2 must be > 0");
    if (skip_scale < 0.0 || skip_scale > 1.0)
        throw ConfigError("diffusion.skip_scale must be in [0, 1]");
    if (train_steps < 0) throw ConfigError("diffusion.train_steps must be >= 0");
    if (batch_size < 1) throw ConfigError("diffusion.batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("diffusion.learning_rate must be > 0");
    if (ema_decay < 0.0 || ema_decay >= 1.0)
        throw ConfigError("diffusion.ema_decay must be in [0, 1)");
}

NoiseDraw draw_noise(int batch_size, int c, int h, int w, int T, Rng& rng) {
    NoiseDraw d;
    d.t.resize(batch_size);
    d.eps.reserve(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        d.t[i] = static_cast<int>(rng.uniform_int(1, T));
        Tensor e(c, h, w);
        for (float& x : e.v) x = static_cast<float>(rng.normal());
        d.eps.push_back(std::move(e));
    }
    return d;
}

std::vector<double> p2_loss_terms(const EpsModel& model, const std::vector<Tensor>& batch,
                                  const NoiseDraw& draw, const NoiseSchedule& schedule,
                                  const P2Config& cfg) {
    std::vector<double> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const int t = draw.t[i];
        const Tensor xt = q_sample(batch[i], t, draw.eps[i], schedule);
        const Tensor pred = model(xt, t, static_cast<int>(i));
        if (!all_finite(pred)) throw TrainingError("non-finite model output at t=" + std::to_string(t));
        double sq = 0.0;
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double d = static_cast<double>(draw.eps[i].v[j]) - pred.v[j];
            sq += d * d;
        }
        terms.push_back(p2_weight(schedule, cfg, t) * sq);
    }
    return terms;
}

double p2_loss(const EpsModel& model, const std::vector<Tensor>& batch,
               const NoiseSchedule& schedule, const P2Config& cfg, Rng& rng) {
    if (batch.empty()) throw DomainError("p2_loss: empty batch");
    const auto& b0 = batch.front();
    const NoiseDraw draw = draw_noise(static_cast<int>(batch.size()), b0.c, b0.h, b0.w,
                                      schedule.T, rng);
    const auto terms = p2_loss_terms(model, batch, draw, schedule, cfg);
    double s = 0.0;
    for (double x : terms) s += x;
    return s / static_cast<double>(terms.size());
}

double p2_loss(Denoiser& denoiser, const std::vector<Tensor>& batch,
               const NoiseSchedule& schedule, const P2Config& cfg, Rng& rng) {
    return p2_loss([&](const Tensor& xt, int t, int) { return denoiser.forward(xt, t); }, batch,
                   schedule, cfg, rng);
}

Denoiser train_diffusion(const Dataset& dataset, const DiffusionConfig& cfg,
                         DiffusionTrainRecord* record) {
    cfg.validate();
    if (dataset.samples.empty()) throw TrainingError("train_diffusion: empty dataset");
    const int side = dataset.samples.front().image.h;
    DenoiserConfig dc;
    dc.image_size = side;
    dc.channels = dataset.samples.front().image.c;
    dc.width = cfg.width;
    dc.temb_dim = cfg.temb_dim;
    dc.skip_scale = static_cast<float>(cfg.skip_scale);
    dc.seed = cfg.seed;
    Denoiser denoiser(dc);
    const NoiseSchedule schedule = cfg.schedule();
    const P2Config p2cfg = cfg.p2();

    std::vector<Tensor> images;
    images.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples) images.push_back(to_model_range(s.image));

    auto params = denoiser.params();
    Adam opt;
    opt.lr = cfg.learning_rate;
    Rng batch_rng(Rng::stream_seed(cfg.seed, "diffusion-batch"));
    Rng noise_rng(Rng::stream_seed(cfg.seed, "diffusion-noise"));

    std::vector<std::vector<float>> ema;
    if (cfg.ema_decay > 0.0) {
        ema.reserve(params.size());
        for (const auto& p : params) ema.emplace_back(p.data, p.data + p.n);
    }

    DiffusionTrainRecord local;
    DiffusionTrainRecord& rec = record ? *record : local;
    rec.step_loss.clear();

    for (int step = 0; step < cfg.train_steps; ++step) {
        zero_grads(params);
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto& x0 =
                images[batch_rng.uniform_int(0, static_cast<std::int64_t>(images.size()) - 1)];
            const int t = static_cast<int>(noise_rng.uniform_int(1, schedule.T));
            Tensor eps(x0.c, x0.h, x0.w);
            for (float& v : eps.v) v = static_cast<float>(noise_rng.normal());
            const Tensor xt = q_sample(x0, t, eps, schedule);
            const Tensor pred = denoiser.forward(xt, t);
            const double lambda = p2_weight(schedule, p2cfg, t);
            double sq = 0.0;
            Tensor dpred(pred.c, pred.h, pred.w);
            for (std::size_t j = 0; j < pred.size(); ++j) {
                const double d = static_cast<double>(pred.v[j]) - eps.v[j];
                sq += d * d;
                dpred.v[j] = static_cast<float>(2.0 * lambda * d);
            }
            loss_sum += lambda * sq;
            denoiser.backward(dpred);
        }
        const double loss = loss_sum / cfg.batch_size;
        if (!std::isfinite(loss))
            throw TrainingError("diffusion training diverged at step " + std::to_string(step));
        rec.step_loss.push_back(loss);
        opt.step(params, 1.0 / cfg.batch_size);
        if (cfg.ema_decay > 0.0) {
            // Ramp the decay up over the first steps so early noise fades out.
            const double d = std::min(cfg.ema_decay, (1.0 + step) / (10.0 + step));
            for (std::size_t p = 0; p < params.size(); ++p)
                for (std::size_t j = 0; j < params[p].n; ++j)
                    ema[p][j] = static_cast<float>(d * ema[p][j] + (1.0 - d) * params[p].data[j]);
        }
    }
    if (cfg.ema_decay > 0.0)
        for (std::size_t p = 0; p < params.size(); ++p)
            std::copy(ema[p].begin(), ema[p].end(), params[p].data);

    const int win = std::max(1, cfg.train_steps / 10);
    auto window_mean = [&](int begin, int end) {
        double s = 0.0;
        for (int i = begin; i < end; ++i) s += rec.step_loss[i];
        return s / std::max(1, end - begin);
    };
    if (!rec.step_loss.empty()) {
        rec.first_window_mean = window_mean(0, win);
        rec.last_window_mean = window_mean(cfg.train_steps - win, cfg.train_steps);
    }
    return denoiser;
}

void save_denoiser(const std::filesystem::path& path, Denoiser& denoiser,
                   const DiffusionConfig& cfg) {
    Checkpoint ckpt;
    nlohmann::json meta;
    meta["kind"] = "denoiser";
    meta["seed"] = cfg.seed;
    meta["config"] = {{"timesteps", cfg.timesteps},     {"beta_start", cfg.beta_start},
                      {"beta_end", cfg.beta_end},       {"gamma_p2", cfg.gamma_p2},
                      {"k_p2", cfg.k_p2},               {"width", cfg.width},
                      {"temb_dim", cfg.temb_dim},       {"skip_scale", cfg.skip_scale},
                      {"train_steps", cfg.train_steps},
                      {"batch_size", cfg.batch_size},   {"learning_rate", cfg.learning_rate},
                      {"ema_decay", cfg.ema_decay},
                      {"image_size", denoiser.config().image_size},
                      {"channels", denoiser.config().channels}};
    ckpt.meta_json = meta.dump();
    params_to_checkpoint(denoiser.params(), ckpt);
    save_checkpoint(path, ckpt);
}

std::pair<Denoiser, DiffusionConfig> load_denoiser(const std::filesystem::path& path) {
    const Checkpoint ckpt = load_checkpoint(path);
    const auto meta = nlohmann::json::parse(ckpt.meta_json);
    if (meta.value("kind", "") != "denoiser")
        throw IngestError("not a denoiser checkpoint: " + path.string());
    const auto& c = meta.at("config");
    DiffusionConfig cfg;
    cfg.timesteps = c.at("timesteps");
    cfg.beta_start = c.at("beta_start");
    cfg.beta_end = c.at("beta_end");
    cfg.gamma_p2 = c.at("gamma_p2");
    cfg.k_p2 = c.at("k_p2");
    cfg.width = c.at("width");
    cfg.temb_dim = c.at("temb_dim");
    // Checkpoints written before skip attenuation existed had full-strength
    // skip paths.
    cfg.skip_scale = c.value("skip_scale", 1.0);
    cfg.train_steps = c.at("train_steps");
    cfg.batch_size = c.at("batch_size");
    cfg.learning_rate = c.at("learning_rate");
    cfg.ema_decay = c.value("ema_decay", 0.0);
    cfg.seed = meta.at("seed");
    DenoiserConfig dc;
    dc.image_size = c.at("image_size");
    dc.channels = c.at("channels");
    dc.width = cfg.width;
    dc.temb_dim = cfg.temb_dim;
    dc.skip_scale = static_cast<float>(cfg.skip_scale);
    dc.seed = cfg.seed;
    Denoiser denoiser(dc);
    params_from_checkpoint(denoiser.params(), ckpt);
    return {std::move(denoiser), cfg};
}

} // namespace diffinject
