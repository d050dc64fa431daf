// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace diffinject {

// Dense CHW float tensor. Small enough to pass by value; all layout is
// channel-major (c, then row, then column).
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.f) {}

    std::size_t size() const { return v.size(); }
    float& at(int ci, int y, int x) { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    float at(int ci, int y, int x) const { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

    float* data() { return v.data(); }
    const float* data() const { return v.data(); }
};

// Double-precision companion used for DDIM latent arithmetic, where the
// closed-form stepping identities are tested well below float resolution.
struct Tensord {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensord() = default;
    Tensord(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0) {}

    std::size_t size() const { return v.size(); }
    double& at(int ci, int y, int x) { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    double at(int ci, int y, int x) const { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    bool same_shape(const Tensord& o) const { return c == o.c && h == o.h && w == o.w; }
};

Tensord widen(const Tensor& t);
Tensor narrow(const Tensord& t);
double max_abs_diff(const Tensord& a, const Tensord& b);
bool all_finite(const Tensord& a);

double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& a);
// Max absolute elementwise difference.
double max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& a);

// Linear map between image range [0,1] and model range [-1,1].
Tensor to_model_range(const Tensor& img01);
Tensor to_image_range(const Tensor& pm1); // clamps to [0,1]
Tensor to_image_range(const Tensord& pm1);

} // namespace diffinject
