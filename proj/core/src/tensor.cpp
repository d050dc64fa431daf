// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace diffinject {

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a.v[i]) * b.v[i];
    return s;
}

double norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.v[i]) - b.v[i]));
    return m;
}

bool all_finite(const Tensor& a) {
    for (float x : a.v)
        if (!std::isfinite(x)) return false;
    return true;
}

Tensor to_model_range(const Tensor& img01) {
    Tensor out = img01;
    for (float& x : out.v) x = 2.f * x - 1.f;
    return out;
}

Tensor to_image_range(const Tensor& pm1) {
    Tensor out = pm1;
    for (float& x : out.v) x = std::clamp(0.5f * (x + 1.f), 0.f, 1.f);
    return out;
}

Tensor to_image_range(const Tensord& pm1) { return to_image_range(narrow(pm1)); }

Tensord widen(const Tensor& t) {
    Tensord out(t.c, t.h, t.w);
    for (std::size_t i = 0; i < t.size(); ++i) out.v[i] = t.v[i];
    return out;
}

Tensor narrow(const Tensord& t) {
    Tensor out(t.c, t.h, t.w);
    for (std::size_t i = 0; i < t.size(); ++i) out.v[i] = static_cast<float>(t.v[i]);
    return out;
}

double max_abs_diff(const Tensord& a, const Tensord& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

bool all_finite(const Tensord& a) {
    for (double x : a.v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace diffinject
