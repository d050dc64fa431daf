// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>

#include "diffinject/nn.hpp"

namespace diffinject {

struct DenoiserConfig {
    int image_size = 32; // must be divisible by 4
    int channels = 3;
    int width = 16;      // base channel width; bottleneck is 4x this
    int temb_dim = 64;
    // Attenuation on the encoder-decoder skip paths. Keeping skips weak
    // forces the bottleneck to carry the semantic content, which is what
    // makes h-space editing effective on a shallow U-Net.
    float skip_scale = 0.2f;
    std::uint64_t seed = 0;
};

// Noise predictor with a readable/overridable bottleneck. The DDIM routines
// accept any implementation; tests plug in closed-form stubs.
class BottleneckModel {
public:
    virtual ~BottleneckModel() = default;
    virtual Tensor forward(const Tensor& x, int t) = 0;
    virtual const Tensor& recorded_h() const = 0;
    virtual void set_h_override(std::optional<Tensor> h) = 0;
    virtual std::array<int, 3> bottleneck_shape() const = 0;
};

// Two-level U-Net noise predictor eps_theta(x_t, t). The innermost feature
// map (the h-space) is recorded on every forward pass and can be overridden
// with an externally supplied tensor of identical shape; overriding with the
// recorded value reproduces the unmodified output bit-for-bit.
class Denoiser final : public BottleneckModel {
public:
    explicit Denoiser(const DenoiserConfig& cfg);

    Tensor forward(const Tensor& x, int t) override;
    // Backpropagates dL/d(output); call directly after forward on the same
    // input. Gradients accumulate until zero_grads().
    void backward(const Tensor& d_out);

    const Tensor& recorded_h() const override { return last_h_; }
    void set_h_override(std::optional<Tensor> h) override;
    std::array<int, 3> bottleneck_shape() const override;

    std::vector<ParamRef> params();
    const DenoiserConfig& config() const { return cfg_; }

private:
    // Pre-activation conv block: conv(act(gn(conv(act(gn(x))) + temb))).
    // Deliberately non-residual: identity passthrough would let an
    // off-manifold latent grow unbounded during h-space injection, while the
    // saturating conv stack keeps the injected reverse walk stable.
    struct ConvBlock {
        GroupNorm gn1, gn2;
        Conv3x3 conv1, conv2;
        Dense tproj;
        SiLU act1, act2;

        ConvBlock() = default;
        ConvBlock(int cin, int cout, int temb_dim, Rng& rng);
        Tensor forward(const Tensor& x, const Vec& e);
        // Returns dx; adds the time-embedding gradient into de.
        Tensor backward(const Tensor& dy, Vec& de);
        void collect(const std::string& prefix, std::vector<ParamRef>& out);
    };

    DenoiserConfig cfg_;
    Dense t1_, t2_;
    SiLU tact_;
    ConvBlock enc0_, enc1_, mid_, dec1_, dec0_;
    Conv3x3 out_conv_;

    // forward caches
    Vec e_cache_;
    Tensor a0_, a1_;
    Tensor last_h_;
    std::optional<Tensor> h_override_;
    int last_t_ = -1;
};

} // namespace diffinject
