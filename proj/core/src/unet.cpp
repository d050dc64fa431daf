// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/unet.hpp"

#include "diffinject/errors.hpp"

namespace diffinject {

Denoiser::ConvBlock::ConvBlock(int cin, int cout, int temb_dim, Rng& rng)
    : gn1(cin), gn2(cout), conv1(cin, cout, rng), conv2(cout, cout, rng),
      tproj(cout, temb_dim, rng) {}

Tensor Denoiser::ConvBlock::forward(const Tensor& x, const Vec& e) {
    Tensor a = conv1.forward(act1.forward(gn1.forward(x)));
    const Vec shift = tproj.forward(e);
    for (int c = 0; c < a.c; ++c) {
        float* row = a.data() + static_cast<std::size_t>(c) * a.h * a.w;
        for (int i = 0; i < a.h * a.w; ++i) row[i] += shift[c];
    }
    return conv2.forward(act2.forward(gn2.forward(a)));
}

Tensor Denoiser::ConvBlock::backward(const Tensor& dy, Vec& de) {
    Tensor da = gn2.backward(act2.backward(conv2.backward(dy)));
    Vec dshift = Vec::Zero(da.c);
    for (int c = 0; c < da.c; ++c) {
        const float* row = da.data() + static_cast<std::size_t>(c) * da.h * da.w;
        for (int i = 0; i < da.h * da.w; ++i) dshift[c] += row[i];
    }
    de += tproj.backward(dshift);
    return gn1.backward(act1.backward(conv1.backward(da)));
}

void Denoiser::ConvBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    gn1.collect(prefix + ".gn1", out);
    gn2.collect(prefix + ".gn2", out);
    conv1.collect(prefix + ".conv1", out);
    conv2.collect(prefix + ".conv2", out);
    tproj.collect(prefix + ".tproj", out);
}

Denoiser::Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
    if (cfg.image_size % 4 != 0) throw ConfigError("denoiser image_size must be divisible by 4");
    if (cfg.width < 1) throw ConfigError("denoiser width must be >= 1");
    Rng rng(Rng::stream_seed(cfg.seed, "denoiser-init"));
    const int w = cfg.width, td = cfg.temb_dim;
    t1_ = Dense(td, td, rng);
    t2_ = Dense(td, td, rng);
    enc0_ = ConvBlock(cfg.channels, w, td, rng);
    enc1_ = ConvBlock(w, 2 * w, td, rng);
    mid_ = ConvBlock(2 * w, 4 * w, td, rng);
    dec1_ = ConvBlock(4 * w + 2 * w, 2 * w, td, rng);
    dec0_ = ConvBlock(2 * w + w, w, td, rng);
    out_conv_ = Conv3x3(w, cfg.channels, rng);
}

std::array<int, 3> Denoiser::bottleneck_shape() const {
    return {4 * cfg_.width, cfg_.image_size / 4, cfg_.image_size / 4};
}

void Denoiser::set_h_override(std::optional<Tensor> h) {
    if (h) {
        const auto bs = bottleneck_shape();
        if (h->c != bs[0] || h->h != bs[1] || h->w != bs[2])
            throw DomainError("h override shape does not match bottleneck shape");
    }
    h_override_ = std::move(h);
}

Tensor Denoiser::forward(const Tensor& x, int t) {
    if (x.c != cfg_.channels || x.h != cfg_.image_size || x.w != cfg_.image_size)
        throw DomainError("denoiser input shape mismatch");
    last_t_ = t;
    Vec e = tact_.forward(t1_.forward(time_embedding(t, cfg_.temb_dim)));
    e = t2_.forward(e);
    e_cache_ = e;

    a0_ = enc0_.forward(x, e);
    a1_ = enc1_.forward(avg_pool2(a0_), e);
    last_h_ = mid_.forward(avg_pool2(a1_), e);
    const Tensor& h_used = h_override_ ? *h_override_ : last_h_;

    Tensor s1 = a1_;
    for (auto& v : s1.v) v *= cfg_.skip_scale;
    Tensor d1 = dec1_.forward(concat_channels(upsample2(h_used), s1), e);
    Tensor s0 = a0_;
    for (auto& v : s0.v) v *= cfg_.skip_scale;
    Tensor d0 = dec0_.forward(concat_channels(upsample2(d1), s0), e);
    return out_conv_.forward(d0);
}

void Denoiser::backward(const Tensor& d_out) {
    Vec de = Vec::Zero(cfg_.temb_dim);
    Tensor dd0 = out_conv_.backward(d_out);
    Tensor dc0 = dec0_.backward(dd0, de);
    Tensor du0, da0_skip;
    split_channels(dc0, 2 * cfg_.width, du0, da0_skip);
    Tensor dd1 = upsample2_backward(du0);
    Tensor dc1 = dec1_.backward(dd1, de);
    Tensor du1, da1_skip;
    split_channels(dc1, 4 * cfg_.width, du1, da1_skip);
    Tensor dh = upsample2_backward(du1);
    Tensor dp2 = mid_.backward(dh, de);
    Tensor da1 = avg_pool2_backward(dp2, a1_.h, a1_.w);
    for (std::size_t i = 0; i < da1.size(); ++i) da1.v[i] += cfg_.skip_scale * da1_skip.v[i];
    Tensor dp1 = enc1_.backward(da1, de);
    Tensor da0 = avg_pool2_backward(dp1, a0_.h, a0_.w);
    for (std::size_t i = 0; i < da0.size(); ++i) da0.v[i] += cfg_.skip_scale * da0_skip.v[i];
    enc0_.backward(da0, de);

    t1_.backward(tact_.backward(t2_.backward(de)));
}

std::vector<ParamRef> Denoiser::params() {
    std::vector<ParamRef> out;
    t1_.collect("temb.t1", out);
    t2_.collect("temb.t2", out);
    enc0_.collect("enc0", out);
    enc1_.collect("enc1", out);
    mid_.collect("mid", out);
    dec1_.collect("dec1", out);
    dec0_.collect("dec0", out);
    out_conv_.collect("out", out);
    return out;
}

} // namespace diffinject
