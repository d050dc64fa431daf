// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "diffinject/errors.hpp"
#include "diffinject/image_io.hpp"
#include "diffinject/rng.hpp"

using namespace diffinject;
namespace fs = std::filesystem;

namespace {
fs::path tmpdir() {
    auto d = fs::temp_directory_path() / "diffinject-test-io";
    fs::create_directories(d);
    return d;
}
} // namespace

TEST_CASE("quantized pixel values survive a write/read round trip") {
    Rng rng(5);
    for (int channels : {1, 3}) {
        Tensor img(channels, 7, 9);
        for (auto& v : img.v)
            v = static_cast<float>(rng.uniform_int(0, 255)) / 255.f; // already on the grid
        const auto p = tmpdir() / (channels == 1 ? "g.pgm" : "c.ppm");
        write_raster(p, img);
        const Tensor back = read_raster(p);
        CHECK(back.c == channels);
        CHECK(back.h == 7);
        CHECK(back.w == 9);
        CHECK(max_abs_diff(img, back) == 0.0);
    }
}

TEST_CASE("arbitrary floats round-trip within quantization error") {
    Rng rng(6);
    Tensor img(3, 8, 8);
    for (auto& v : img.v) v = static_cast<float>(rng.uniform());
    const auto p = tmpdir() / "q.ppm";
    write_raster(p, img);
    CHECK(max_abs_diff(img, read_raster(p)) <= 0.5f / 255.f + 1e-6f);
}

TEST_CASE("missing and malformed rasters raise ingest errors") {
    CHECK_THROWS_AS(read_raster(tmpdir() / "nope.ppm"), IngestError);
    const auto p = tmpdir() / "bad.ppm";
    {
        std::ofstream f(p);
        f << "P9 not an image";
    }
    CHECK_THROWS_AS(read_raster(p), IngestError);
}

TEST_CASE("resize preserves constant images and is identity at same size") {
    Tensor img(3, 6, 6);
    for (auto& v : img.v) v = 0.25f;
    const Tensor up = resize(img, 12);
    CHECK(up.h == 12);
    for (float v : up.v) CHECK(v == doctest::Approx(0.25f));
    const Tensor same = resize(img, 6);
    CHECK(max_abs_diff(img, same) < 1e-6);
}
