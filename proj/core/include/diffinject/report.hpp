// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "diffinject/dataset.hpp"
#include "diffinject/pipeline.hpp"

namespace diffinject {

struct MetricsRow {
    std::string method; // vanilla | diffinject
    double rho = 0.0;
    std::string bias_kind;
    std::uint64_t seed = 0;
    double overall = 0.0;
    double aligned = 0.0;
    double conflict = 0.0;

    bool operator==(const MetricsRow&) const = default;
};

struct MetricsTable {
    std::vector<MetricsRow> rows;

    bool operator==(const MetricsTable&) const = default;
};

// Writes both a human-readable table (<stem>.txt) and line-delimited data
// (<stem>.csv). Rows are grouped by (method, rho); accuracy columns show
// mean +/- std over seeds (std omitted for single-seed groups) and the best
// value per column is marked with '*'.
void emit_table(const MetricsTable& table, const std::filesystem::path& stem);

// Re-reads the line-delimited data file written by emit_table.
MetricsTable load_metrics_rows(const std::filesystem::path& csv_path);

// n-row triptych grid (original | content | generated), rows matched through
// the synthetic provenance records. Returns the written image.
Tensor emit_sample_grid(const Dataset& d_orig, const Dataset& d_syn,
                        const std::vector<SyntheticProvenance>& provenance, int n,
                        const std::filesystem::path& out_path);

} // namespace diffinject
