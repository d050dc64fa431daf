// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>

#include "diffinject/schedule.hpp"
#include "diffinject/unet.hpp"

namespace diffinject {

struct InjectionConfig {
    double gamma = 0.9;    // content injection ratio, in [0,1]
    int t_edit = 0;        // injection window is [T, t_edit]
    int t_boost = 0;       // stochastic boost window is [t_boost, 0]
    double eta_boost = 1.0;
    std::optional<Tensor> mask; // binary, 1 x bh x bw over the bottleneck grid

    void validate(int T, const std::array<int, 3>& bottleneck) const;
};

// Spherical linear interpolation sin((1-g)W)/sin(W) a + sin(gW)/sin(W) b,
// W = angle(a, b). Falls back to lerp for near-parallel inputs. Endpoints
// are returned exactly.
std::vector<float> slerp(const std::vector<float>& a, const std::vector<float>& b, double gamma);

// Slerp of h_content (rescaled onto h_orig's norm) into h_orig, flattened
// over the masked region. Unmasked entries are copied bit-for-bit.
Tensor inject_h(const Tensor& h_orig, const Tensor& h_content, double gamma,
                const Tensor* mask = nullptr);

// Latents are carried in double precision: the closed-form DDIM stepping
// identities are regression-tested far below float resolution.
struct LatentTrajectory {
    Tensord x_T;                   // terminal latent, model range
    std::vector<Tensor> h;         // h[t-1] from the forward pass at timestep t
    std::vector<Tensord> pred_x0;  // pred_x0[t-1], model range, for calibration
};

// Deterministic (sigma = 0) reverse-direction DDIM stepping from t=0 up to
// t=T under a frozen model. x0 must be in model range [-1, 1].
LatentTrajectory ddim_invert(const Tensor& x0, BottleneckModel& model,
                             const NoiseSchedule& schedule);

// Plain deterministic DDIM reconstruction from x_T; returns model range.
// When `record` is given, fills its per-step bottleneck activations.
Tensord ddim_reverse(const Tensord& x_T, BottleneckModel& model, const NoiseSchedule& schedule,
                     LatentTrajectory* record = nullptr);

// DDIM reversal with h-space content injection over [T, t_edit] and
// stochastic noise injection over [t_boost, 0]. The direction term always
// uses the unmodified forward pass. Returns an image in [0, 1].
Tensor reverse_with_injection(const Tensord& x_T, const LatentTrajectory& content,
                              BottleneckModel& model, const NoiseSchedule& schedule,
                              const InjectionConfig& cfg, Rng* boost_rng = nullptr);

using DistanceFn = std::function<double(const Tensor& a, const Tensor& b)>;

// Default pluggable perceptual distance: L2 over per-patch (8x8) per-channel
// mean and variance statistics.
double patch_stats_distance(const Tensor& a, const Tensor& b);

// Scans t upward and returns the first timestep whose mean distance reaches
// the threshold. `mean_dist[t-1]` is the profile value at timestep t.
int pick_t_edit(const std::vector<double>& mean_dist, double threshold);

// Builds the distance profile over the calibration set (images in [0,1])
// from each image's inversion trajectory, then picks t_edit.
int compute_t_edit(BottleneckModel& model, const NoiseSchedule& schedule,
                   const std::vector<Tensor>& calibration_images, const DistanceFn& distance_fn,
                   double threshold = 0.33);

// Projects a [0,1] image's bright foreground onto the bottleneck grid
// (max-pooled luminance threshold); default local-injection mask.
Tensor foreground_mask(const Tensor& image01, int grid_h, int grid_w);

} // namespace diffinject
