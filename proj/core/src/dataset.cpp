// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/dataset.hpp"

#include <fstream>
#include <sstream>

#include "diffinject/errors.hpp"
#include "diffinject/image_io.hpp"

namespace diffinject {

void DatasetSpec::validate() const {
    if (num_classes < 2)
        throw ConfigError("num_classes must be >= 2, got " + std::to_string(num_classes));
    if (num_bias_values != num_classes)
        throw ConfigError("num_bias_values must equal num_classes");
    if (conflict_ratio < 0.0 || conflict_ratio > 1.0)
        throw ConfigError("conflict_ratio must be in [0,1], got " + std::to_string(conflict_ratio));
    if (image_size < 8) throw ConfigError("image_size must be >= 8");
    if (samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
}

const Sample* Dataset::find(std::int64_t sample_id) const {
    for (const auto& s : samples)
        if (s.sample_id == sample_id) return &s;
    return nullptr;
}

int Dataset::count_conflicts() const {
    int n = 0;
    for (const auto& s : samples) n += s.is_conflict ? 1 : 0;
    return n;
}

std::string to_string(BiasKind k) { return k == BiasKind::color ? "color" : "texture"; }

BiasKind bias_kind_from_string(const std::string& s) {
    if (s == "color") return BiasKind::color;
    if (s == "texture") return BiasKind::texture;
    throw ConfigError("unknown bias_kind '" + s + "' (expected color|texture)");
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir / "images");
    std::ofstream m(dir / "manifest.csv");
    if (!m) throw IngestError("cannot write manifest in " + dir.string());
    m << "sample_id,class_label,bias_label,is_conflict,relative_path\n";
    for (const auto& s : ds.samples) {
        std::ostringstream name;
        name << "images/" << s.sample_id << (s.image.c == 3 ? ".ppm" : ".pgm");
        write_raster(dir / name.str(), s.image);
        m << s.sample_id << "," << s.class_label << "," << s.bias_label << ","
          << (s.is_conflict ? 1 : 0) << "," << name.str() << "\n";
    }
    // Spec echo so load_dataset can rebuild the Dataset without the RunConfig.
    std::ofstream sp(dir / "spec.csv");
    sp << "num_classes,num_bias_values,image_size,samples_per_class,conflict_ratio,bias_kind,seed,split\n";
    sp << ds.spec.num_classes << "," << ds.spec.num_bias_values << "," << ds.spec.image_size << ","
       << ds.spec.samples_per_class << "," << ds.spec.conflict_ratio << ","
       << to_string(ds.spec.bias_kind) << "," << ds.spec.seed << ","
       << (ds.split == Split::train ? "train" : "unbiased_test") << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream m(dir / "manifest.csv");
    if (!m) throw IngestError("cannot open manifest in " + dir.string());
    Dataset ds;
    std::string line;
    if (!std::getline(m, line) ||
        line != "sample_id,class_label,bias_label,is_conflict,relative_path")
        throw ManifestError("bad or missing manifest header in " + dir.string());
    while (std::getline(m, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f0, f1, f2, f3, f4;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') ||
            !std::getline(ss, f2, ',') || !std::getline(ss, f3, ',') || !std::getline(ss, f4))
            throw ManifestError("malformed manifest line: " + line);
        Sample s;
        s.sample_id = std::stoll(f0);
        s.class_label = std::stoi(f1);
        s.bias_label = std::stoi(f2);
        s.is_conflict = f3 == "1" || f3 == "true";
        const auto img_path = dir / f4;
        if (!std::filesystem::exists(img_path))
            throw IngestError("manifest references missing file: " + img_path.string());
        s.image = read_raster(img_path);
        ds.samples.push_back(std::move(s));
    }
    std::ifstream sp(dir / "spec.csv");
    if (sp) {
        std::string header, row;
        std::getline(sp, header);
        if (std::getline(sp, row)) {
            std::istringstream ss(row);
            std::string t;
            std::getline(ss, t, ','); ds.spec.num_classes = std::stoi(t);
            std::getline(ss, t, ','); ds.spec.num_bias_values = std::stoi(t);
            std::getline(ss, t, ','); ds.spec.image_size = std::stoi(t);
            std::getline(ss, t, ','); ds.spec.samples_per_class = std::stoi(t);
            std::getline(ss, t, ','); ds.spec.conflict_ratio = std::stod(t);
            std::getline(ss, t, ','); ds.spec.bias_kind = bias_kind_from_string(t);
            std::getline(ss, t, ','); ds.spec.seed = std::stoull(t);
            std::getline(ss, t, ','); ds.split = t == "train" ? Split::train : Split::unbiased_test;
        }
    }
    return ds;
}

} // namespace diffinject
