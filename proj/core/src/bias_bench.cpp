// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/bias_bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "diffinject/errors.hpp"
#include "diffinject/image_io.hpp"
#include "diffinject/rng.hpp"

namespace diffinject {

namespace {

// Signed distance-like field per glyph kind, negative inside. Shapes are
// dense so that color/texture bias has a large foreground to act on.
float glyph_field(int kind, float x, float y, float r) {
    const float d = std::sqrt(x * x + y * y);
    switch (kind % 6) {
        case 0: // disk
            return d - r;
        case 1: { // triangle (pointing up)
            const float k = 0.866025f;
            float q = std::max(std::abs(x) * k + y * 0.5f, -y) - r * 0.55f;
            return q;
        }
        case 2: // diamond
            return (std::abs(x) + std::abs(y)) - r * 1.2f;
        case 3: // ring
            return std::abs(d - r * 0.75f) - r * 0.32f;
        case 4: { // plus
            const float bar = r * 0.38f;
            const float dx = std::abs(x) - bar, dy = std::abs(y) - bar;
            return std::min(std::max(dx, std::abs(y) - r),
                            std::max(dy, std::abs(x) - r));
        }
        default: // square
            return std::max(std::abs(x), std::abs(y)) - r * 0.85f;
    }
}

void hsv_to_rgb(float h, float s, float v, float rgb[3]) {
    const float c = v * s;
    const float hp = h * 6.f;
    const float xm = c * (1.f - std::abs(std::fmod(hp, 2.f) - 1.f));
    float r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = xm; }
    else if (hp < 2) { r = xm; g = c; }
    else if (hp < 3) { g = c; b = xm; }
    else if (hp < 4) { g = xm; b = c; }
    else if (hp < 5) { r = xm; b = c; }
    else { r = c; b = xm; }
    rgb[0] = r + (v - c);
    rgb[1] = g + (v - c);
    rgb[2] = b + (v - c);
}

Tensor texture_pattern(int bias_value, int size) {
    Tensor bg(1, size, size);
    const float theta = static_cast<float>(M_PI) * bias_value / 7.f + 0.3f;
    const float freq = 3.f + 2.f * static_cast<float>(bias_value % 4);
    const float cx = std::cos(theta), sx = std::sin(theta);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const float u = (x * cx + y * sx) / size;
            bg.at(0, y, x) = 0.28f + 0.22f * std::sin(2.f * static_cast<float>(M_PI) * freq * u);
        }
    return bg;
}

Sample make_sample(const DatasetSpec& spec, Split split, int class_label, int index,
                   int bias_label, std::int64_t sample_id) {
    const int n = spec.image_size;
    const Tensor mask = glyph_mask(spec, split, class_label, index);
    Sample s;
    s.class_label = class_label;
    s.bias_label = bias_label;
    s.is_conflict = bias_label != aligned_bias_of(class_label);
    s.sample_id = sample_id;
    s.image = Tensor(3, n, n);
    float fg[3];
    if (spec.bias_kind == BiasKind::color) {
        bias_color(bias_label, spec.num_bias_values, fg);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const float m = mask.at(0, y, x);
                for (int c = 0; c < 3; ++c)
                    s.image.at(c, y, x) = m * fg[c] + (1.f - m) * 0.05f;
            }
    } else {
        const Tensor bg = texture_pattern(bias_label, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const float m = mask.at(0, y, x);
                for (int c = 0; c < 3; ++c)
                    s.image.at(c, y, x) = m * 0.92f + (1.f - m) * bg.at(0, y, x);
            }
    }
    return s;
}

} // namespace

Tensor glyph_mask(const DatasetSpec& spec, Split split, int class_label, int index) {
    const int n = spec.image_size;
    const std::uint64_t idx =
        static_cast<std::uint64_t>(split == Split::train ? 0 : 1) * 1000000ULL +
        static_cast<std::uint64_t>(class_label) * 100000ULL + static_cast<std::uint64_t>(index);
    Rng rng(Rng::stream_seed(spec.seed, "glyph", idx));
    // Position and scale jitter keeps the shape cue non-trivial for a
    // raw-pixel classifier while leaving geometry independent of bias.
    const float jx = static_cast<float>(rng.uniform() * 6.0 - 3.0);
    const float jy = static_cast<float>(rng.uniform() * 6.0 - 3.0);
    const float scale = static_cast<float>(0.80 + 0.35 * rng.uniform());
    const float r = 0.34f * n * scale;
    const float cx = 0.5f * n + jx, cy = 0.5f * n + jy;
    Tensor mask(1, n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const float d = glyph_field(class_label, x + 0.5f - cx, y + 0.5f - cy, r);
            // ~1px soft edge
            mask.at(0, y, x) = std::clamp(0.5f - d, 0.f, 1.f);
        }
    return mask;
}

void bias_color(int bias_value, int num_bias_values, float rgb[3]) {
    const float hue = static_cast<float>(bias_value) / static_cast<float>(num_bias_values);
    hsv_to_rgb(hue, 0.9f, 1.0f, rgb);
}

std::pair<Dataset, Dataset> generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset train, test;
    train.spec = spec;
    train.split = Split::train;
    test.spec = spec;
    test.split = Split::unbiased_test;

    const int spc = spec.samples_per_class;
    const int conflicts_per_class = static_cast<int>(std::lround(spec.conflict_ratio * spc));
    std::int64_t next_id = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        Rng crng(Rng::stream_seed(spec.seed, "conflict", static_cast<std::uint64_t>(c)));
        std::vector<int> order(spc);
        std::iota(order.begin(), order.end(), 0);
        for (int i = spc - 1; i > 0; --i)
            std::swap(order[i], order[crng.uniform_int(0, i)]);
        std::vector<bool> conflict(spc, false);
        for (int i = 0; i < conflicts_per_class; ++i) conflict[order[i]] = true;
        for (int i = 0; i < spc; ++i) {
            int bias = aligned_bias_of(c);
            if (conflict[i]) {
                // Uniform over the non-aligned values.
                int pick = static_cast<int>(crng.uniform_int(0, spec.num_bias_values - 2));
                bias = pick >= aligned_bias_of(c) ? pick + 1 : pick;
            }
            train.samples.push_back(make_sample(spec, Split::train, c, i, bias, next_id++));
        }
    }
    std::int64_t test_id = 1000000;
    for (int c = 0; c < spec.num_classes; ++c)
        for (int i = 0; i < spc; ++i) {
            const int bias = i % spec.num_bias_values;
            test.samples.push_back(make_sample(spec, Split::unbiased_test, c, i, bias, test_id++));
        }
    return {std::move(train), std::move(test)};
}

Dataset ingest_folder(const std::filesystem::path& folder, const std::filesystem::path& manifest,
                      int image_size) {
    std::ifstream m(manifest);
    if (!m) throw IngestError("cannot open manifest: " + manifest.string());
    Dataset ds;
    ds.spec.image_size = image_size;
    std::string line;
    if (!std::getline(m, line)) throw ManifestError("empty manifest: " + manifest.string());
    if (line != "filename,class_label,bias_label" && line != "filename,class_label")
        throw ManifestError("bad manifest header: '" + line + "'");
    std::int64_t next_id = 0;
    int max_class = 1;
    while (std::getline(m, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string fname, cls, bias;
        std::getline(ss, fname, ',');
        if (!std::getline(ss, cls, ',') || cls.empty())
            throw ManifestError("missing class_label for '" + fname + "'");
        std::getline(ss, bias, ',');
        const auto path = folder / fname;
        if (!std::filesystem::exists(path))
            throw IngestError("manifest references missing file: " + path.string());
        Sample s;
        try {
            s.image = resize(read_raster(path), image_size);
        } catch (const IngestError&) {
            throw;
        } catch (const std::exception& e) {
            throw IngestError("unreadable file " + path.string() + ": " + e.what());
        }
        s.class_label = std::stoi(cls);
        s.bias_label = bias.empty() ? -1 : std::stoi(bias);
        s.sample_id = next_id++;
        max_class = std::max(max_class, s.class_label + 1);
        ds.samples.push_back(std::move(s));
    }
    ds.spec.num_classes = max_class;
    ds.spec.num_bias_values = max_class;
    ds.spec.samples_per_class = 0;
    return ds;
}

} // namespace diffinject
