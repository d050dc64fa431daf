// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "diffinject/tensor.hpp"

namespace diffinject {

// Lossless 8-bit binary PPM (P6, 3 channels) / PGM (P5, 1 channel).
// Values are quantized with round(x * 255) on write and divided back on read.
void write_raster(const std::filesystem::path& path, const Tensor& img01);
Tensor read_raster(const std::filesystem::path& path);

// Bilinear resize to side x side (all channels).
Tensor resize(const Tensor& img, int side);

} // namespace diffinject
