// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "diffinject/classifiers.hpp"
#include "diffinject/dataset.hpp"
#include "diffinject/diffusion.hpp"

namespace diffinject {

struct DataConfig {
    DatasetSpec spec;
    // When `path` is set the dataset is ingested from an image folder with
    // `manifest` instead of being generated.
    std::string path;
    std::string manifest;
};

struct InjectionSettings {
    double gamma = 0.9;
    int t_edit = -1;  // -1: calibrate from the distance threshold
    int t_boost = -1; // -1: 0.2 * T
    double eta_boost = 1.0;
    std::string mask = "auto"; // none | auto | <raster file at bottleneck resolution>
    double distance_threshold = 0.33;
    int calibration_images = 8;
};

struct PipelineSettings {
    int k = 10;
    double bias_conflict_ratio_syn = 0.1; // |D_syn| / |D_orig|
    bool same_class_pairing = true;
    int workers = 1;
};

struct ReportSettings {
    int grid_rows = 6;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_root = "out";
    DataConfig data;
    ClassifierConfig bias_classifier;
    ClassifierConfig debiased_classifier;
    DiffusionConfig diffusion;
    InjectionSettings injection;
    PipelineSettings pipeline;
    ReportSettings report;

    void validate() const;
};

// Returns a RunConfig with every documented default filled in.
RunConfig default_config();

// Parses and validates structured config text. Unknown keys are rejected;
// parse errors carry a line number; validation errors name the key.
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config(const std::filesystem::path& path);

// Canonical serialization; parse_config(serialize_config(c)) round-trips.
std::string serialize_config(const RunConfig& cfg);

} // namespace diffinject
