// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "diffinject/checkpoint.hpp"
#include "diffinject/rng.hpp"
#include "diffinject/tensor.hpp"

namespace diffinject {

// Row-major throughout so Eigen maps line up with Tensor memory.
using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXf;

struct ParamRef {
    std::string name;
    std::vector<int> shape;
    float* data;
    float* grad;
    std::size_t n;
};

// ---- layers -------------------------------------------------------------
// Each layer caches what its backward pass needs; the usage pattern is
// strictly forward(item) then backward(item) before the next item.

struct Dense {
    Mat W, dW;
    Vec b, db;
    Vec x_cache;

    Dense() = default;
    Dense(int out, int in, Rng& rng);
    Vec forward(const Vec& x);
    Vec backward(const Vec& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct Conv3x3 {
    int cin = 0, cout = 0;
    Mat W, dW; // (cout, cin*9)
    Vec b, db;
    Mat cols_cache; // (cin*9, h*w)
    int h = 0, w = 0;

    Conv3x3() = default;
    Conv3x3(int cin_, int cout_, Rng& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct Conv1x1 {
    int cin = 0, cout = 0;
    Mat W, dW; // (cout, cin)
    Vec b, db;
    Mat x_cache; // (cin, h*w)
    int h = 0, w = 0;

    Conv1x1() = default;
    Conv1x1(int cin_, int cout_, Rng& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// Per-sample group normalization with learned per-channel scale and shift.
// The group count is the largest divisor of `channels` not exceeding 8.
struct GroupNorm {
    int channels = 0, groups = 0;
    Vec gamma, dgamma, beta, dbeta;
    Tensor xhat_cache;
    std::vector<float> inv_std_;

    GroupNorm() = default;
    explicit GroupNorm(int channels_);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct SiLU {
    Tensor x_cache;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy) const;
    Vec x_vec_cache;
    Vec forward(const Vec& x);
    Vec backward(const Vec& dy) const;
};

struct ReLU {
    Vec x_vec_cache;
    Vec forward(const Vec& x);
    Vec backward(const Vec& dy) const;
    Tensor x_cache;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy) const;
};

Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& dy, int in_h, int in_w);
Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& dy);
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& d, int ca, Tensor& da, Tensor& db);

// Sinusoidal timestep embedding of even dimension `dim`.
Vec time_embedding(int t, int dim);

// ---- optimizer ----------------------------------------------------------

struct Adam {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<std::vector<float>> m_, v_;
    long step_count = 0;

    void step(const std::vector<ParamRef>& params, double grad_scale = 1.0);
};

void zero_grads(const std::vector<ParamRef>& params);

// ---- checkpoint helpers -------------------------------------------------

void params_to_checkpoint(const std::vector<ParamRef>& params, Checkpoint& ckpt);
void params_from_checkpoint(const std::vector<ParamRef>& params, const Checkpoint& ckpt);

// im2col for 3x3 stride-1 pad-1 convolutions (exposed for benchmarks).
Mat im2col3x3(const Tensor& x);

} // namespace diffinject
