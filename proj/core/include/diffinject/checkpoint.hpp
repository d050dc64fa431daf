// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace diffinject {

// Versioned binary container: magic, format version, a JSON metadata blob
// (config echo, seed, array directory), then raw float32 little-endian
// payloads in directory order. Writing is byte-deterministic.
struct ArrayRecord {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

struct Checkpoint {
    std::string meta_json; // canonical JSON text
    std::vector<ArrayRecord> arrays;

    const ArrayRecord& array(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace diffinject
