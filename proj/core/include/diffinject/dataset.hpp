// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diffinject/tensor.hpp"

namespace diffinject {

enum class BiasKind { color, texture };
enum class Split { train, unbiased_test };

struct Sample {
    Tensor image;        // HxWxC in [0,1], stored CHW
    int class_label = 0;
    int bias_label = -1; // -1 when unknown (ingested real data)
    bool is_conflict = false;
    std::int64_t sample_id = 0;
};

struct DatasetSpec {
    int num_classes = 3;
    int num_bias_values = 3; // == num_classes, one aligned bias value per class
    int image_size = 32;
    int samples_per_class = 200;
    double conflict_ratio = 0.01;
    BiasKind bias_kind = BiasKind::color;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    std::vector<Sample> samples;
    DatasetSpec spec;
    Split split = Split::train;

    const Sample* find(std::int64_t sample_id) const;
    int count_conflicts() const;
};

// The aligned bias value for a class under the identity alignment map.
inline int aligned_bias_of(int class_label) { return class_label; }

std::string to_string(BiasKind k);
BiasKind bias_kind_from_string(const std::string& s);

// On-disk layout: <dir>/manifest.csv plus one lossless raster per sample
// under <dir>/images/. Manifest fields, in order:
//   sample_id,class_label,bias_label,is_conflict,relative_path
// UTF-8, comma separated, header line required.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

} // namespace diffinject
