// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <utility>

#include "diffinject/dataset.hpp"
#include "diffinject/schedule.hpp"
#include "diffinject/unet.hpp"

namespace diffinject {

struct DiffusionConfig {
    int timesteps = 100;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double gamma_p2 = 1.0; // P2 gamma
    double k_p2 = 1.0;     // P2 k
    int width = 32;
    int temb_dim = 64;
    double skip_scale = 0.3; // U-Net skip-path attenuation, in [0, 1]
    int train_steps = 2000;
    int batch_size = 8;
    double learning_rate = 2e-4;
    double ema_decay = 0.999; // exponential moving average of weights; 0 disables
    std::uint64_t seed = 0;

    void validate() const;
    NoiseSchedule schedule() const { return make_schedule(timesteps, beta_start, beta_end); }
    P2Config p2() const { return {gamma_p2, k_p2}; }
};

// Model abstraction for the loss so tests can plug in closed-form stubs.
// `item` is the batch index of the sample the noised input came from.
using EpsModel = std::function<Tensor(const Tensor& x_t, int t, int item)>;

// Per-item draw of (t, eps) for one batch, from a caller-owned stream.
struct NoiseDraw {
    std::vector<int> t;
    std::vector<Tensor> eps;
};
NoiseDraw draw_noise(int batch_size, int c, int h, int w, int T, Rng& rng);

// Per-sample terms lambda_t^P2 * ||eps - eps_theta(x_t, t)||^2 for a batch
// already in model range [-1, 1].
std::vector<double> p2_loss_terms(const EpsModel& model, const std::vector<Tensor>& batch,
                                  const NoiseDraw& draw, const NoiseSchedule& schedule,
                                  const P2Config& cfg);

// Mean of the terms above with (t, eps) sampled from rng.
double p2_loss(const EpsModel& model, const std::vector<Tensor>& batch,
               const NoiseSchedule& schedule, const P2Config& cfg, Rng& rng);
double p2_loss(Denoiser& denoiser, const std::vector<Tensor>& batch,
               const NoiseSchedule& schedule, const P2Config& cfg, Rng& rng);

struct DiffusionTrainRecord {
    std::vector<double> step_loss;
    double first_window_mean = 0.0; // mean loss over the first 10% of steps
    double last_window_mean = 0.0;  // mean loss over the last 10% of steps
};

// Trains the denoiser with the P2-weighted epsilon-prediction objective.
// Dataset images in [0,1] are mapped to [-1,1] internally. Deterministic in
// cfg.seed.
Denoiser train_diffusion(const Dataset& dataset, const DiffusionConfig& cfg,
                         DiffusionTrainRecord* record = nullptr);

void save_denoiser(const std::filesystem::path& path, Denoiser& denoiser,
                   const DiffusionConfig& cfg);
std::pair<Denoiser, DiffusionConfig> load_denoiser(const std::filesystem::path& path);

} // namespace diffinject
