// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <doctest.h>

#include "diffinject/rng.hpp"
#include "diffinject/tensor.hpp"

using namespace diffinject;

TEST_CASE("tensor indexing is channel-major") {
    Tensor t(2, 3, 4);
    t.at(1, 2, 3) = 5.f;
    CHECK(t.v[1 * 12 + 2 * 4 + 3] == 5.f);
    CHECK(t.size() == 24);
}

TEST_CASE("dot and norm agree with direct sums") {
    Tensor a(1, 2, 2), b(1, 2, 2);
    a.v = {1, 2, 3, 4};
    b.v = {5, 6, 7, 8};
    CHECK(dot(a, b) == doctest::Approx(70.0));
    CHECK(norm(a) == doctest::Approx(std::sqrt(30.0)));
    CHECK(max_abs_diff(a, b) == doctest::Approx(4.0));
}

TEST_CASE("all_finite flags NaN and infinity") {
    Tensor t(1, 1, 2);
    CHECK(all_finite(t));
    t.v[0] = std::nanf("");
    CHECK_FALSE(all_finite(t));
    t.v[0] = INFINITY;
    CHECK_FALSE(all_finite(t));
}

TEST_CASE("range maps round-trip inside [0,1]") {
    Rng rng(1);
    Tensor img(3, 4, 4);
    for (auto& v : img.v) v = static_cast<float>(rng.uniform());
    const Tensor back = to_image_range(to_model_range(img));
    CHECK(max_abs_diff(img, back) < 1e-6);
    // Model-range extremes map to the range ends, out-of-range clamps.
    Tensor pm(1, 1, 3);
    pm.v = {-1.f, 1.f, 3.f};
    const Tensor i = to_image_range(pm);
    CHECK(i.v[0] == 0.f);
    CHECK(i.v[1] == 1.f);
    CHECK(i.v[2] == 1.f);
}
