// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "diffinject/bias_bench.hpp"
#include "diffinject/errors.hpp"
#include "diffinject/image_io.hpp"
#include "diffinject/report.hpp"

using namespace diffinject;
namespace fs = std::filesystem;

namespace {
fs::path tmpdir(const std::string& leaf) {
    auto d = fs::temp_directory_path() / ("diffinject-report-" + leaf);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

MetricsRow row(const std::string& method, std::uint64_t seed, double overall, double aligned,
               double conflict) {
    return {method, 0.01, "color", seed, overall, aligned, conflict};
}
} // namespace

TEST_CASE("three-seed aggregation matches hand arithmetic") {
    MetricsTable t;
    t.rows = {row("diffinject", 0, 0.60, 0.70, 0.50), row("diffinject", 1, 0.62, 0.72, 0.52),
              row("diffinject", 2, 0.64, 0.74, 0.54)};
    const auto stem = tmpdir("agg") / "table";
    emit_table(t, stem);
    const std::string txt = slurp(fs::path(stem.string() + ".txt"));
    // mean 0.62, std 0.02 over {0.60, 0.62, 0.64}
    CHECK(txt.find("0.6200 +/- 0.0200") != std::string::npos);
    CHECK(txt.find("0.7200 +/- 0.0200") != std::string::npos);
}

TEST_CASE("single-record table omits the spread") {
    MetricsTable t;
    t.rows = {row("vanilla", 0, 0.5, 0.6, 0.4)};
    const auto stem = tmpdir("single") / "table";
    emit_table(t, stem);
    const std::string txt = slurp(fs::path(stem.string() + ".txt"));
    CHECK(txt.find("+/-") == std::string::npos);
    CHECK(txt.find("0.5000") != std::string::npos);
}

TEST_CASE("the best group per accuracy column is marked") {
    MetricsTable t;
    t.rows = {row("vanilla", 0, 0.4, 0.9, 0.1), row("diffinject", 0, 0.7, 0.8, 0.6)};
    const auto stem = tmpdir("best") / "table";
    emit_table(t, stem);
    std::istringstream txt(slurp(fs::path(stem.string() + ".txt")));
    std::string header, vanilla_line, diffinject_line;
    std::getline(txt, header);
    std::getline(txt, vanilla_line);
    std::getline(txt, diffinject_line);
    CHECK(vanilla_line.find("0.9000 *") != std::string::npos);    // best aligned
    CHECK(diffinject_line.find("0.7000 *") != std::string::npos); // best overall
    CHECK(diffinject_line.find("0.6000 *") != std::string::npos); // best conflict
    CHECK(vanilla_line.find("0.4000 *") == std::string::npos);
}

TEST_CASE("data file re-parses to an identical table") {
    MetricsTable t;
    t.rows = {row("vanilla", 0, 0.4, 0.45, 0.35), row("diffinject", 0, 0.712345678901, 0.8, 0.6),
              row("diffinject", 1, 0.73, 0.81, 0.61)};
    const auto stem = tmpdir("rt") / "table";
    emit_table(t, stem);
    const MetricsTable back = load_metrics_rows(fs::path(stem.string() + ".csv"));
    CHECK(back == t);
}

TEST_CASE("table emission is byte-identical across repeats") {
    MetricsTable t;
    t.rows = {row("vanilla", 0, 0.4, 0.45, 0.35), row("diffinject", 0, 0.7, 0.8, 0.6)};
    const auto s1 = tmpdir("det1") / "table";
    const auto s2 = tmpdir("det2") / "table";
    emit_table(t, s1);
    emit_table(t, s2);
    CHECK(slurp(fs::path(s1.string() + ".txt")) == slurp(fs::path(s2.string() + ".txt")));
    CHECK(slurp(fs::path(s1.string() + ".csv")) == slurp(fs::path(s2.string() + ".csv")));
}

TEST_CASE("table domain errors") {
    MetricsTable empty;
    CHECK_THROWS_AS(emit_table(empty, tmpdir("err") / "t"), DomainError);
    MetricsTable bad;
    bad.rows = {row("vanilla", 0, 1.4, 0.5, 0.5)};
    CHECK_THROWS_AS(emit_table(bad, tmpdir("err2") / "t"), DomainError);
}

namespace {
struct GridFixture {
    Dataset d_orig, d_syn;
    std::vector<SyntheticProvenance> prov;

    GridFixture() {
        DatasetSpec spec;
        spec.image_size = 16;
        spec.samples_per_class = 4;
        spec.conflict_ratio = 0.0;
        spec.seed = 71;
        d_orig = generate_dataset(spec).first;
        d_syn.spec = spec;
        for (int j = 0; j < 3; ++j) {
            Sample s = d_orig.samples[j];
            s.sample_id = 2000000 + j;
            d_syn.samples.push_back(s);
            prov.push_back({d_orig.samples[j + 3].sample_id, d_orig.samples[j].sample_id, 0.9, 50,
                            20, 7u + j, d_orig.samples[j + 3].class_label});
        }
    }
};
} // namespace

TEST_CASE("sample grid layout matches the declared geometry") {
    GridFixture fx;
    const auto out = tmpdir("grid") / "grid.ppm";
    const Tensor g1 = emit_sample_grid(fx.d_orig, fx.d_syn, fx.prov, 1, out);
    // 1 row: margins of 2 around each 16x16 cell.
    CHECK(g1.h == 1 * 16 + 2 * 2);
    CHECK(g1.w == 3 * 16 + 4 * 2);
    const Tensor g3 = emit_sample_grid(fx.d_orig, fx.d_syn, fx.prov, 3, out);
    CHECK(g3.h == 3 * 16 + 4 * 2);
    CHECK(g3.w == 3 * 16 + 4 * 2);
    // Decode back and compare against what was returned.
    const Tensor decoded = read_raster(out);
    CHECK(decoded.h == g3.h);
    CHECK(decoded.w == g3.w);

    // Row i column 0 is the provenance original; column 2 the generated sample.
    for (int i = 0; i < 3; ++i) {
        const Sample* orig = fx.d_orig.find(fx.prov[i].original_id);
        REQUIRE(orig != nullptr);
        double diff = 0;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x)
                    diff = std::max(diff, static_cast<double>(std::abs(
                                              g3.at(c, 2 + i * 18 + y, 2 + x) -
                                              orig->image.at(c, y, x))));
        CHECK(diff < 1e-6);
    }
}

TEST_CASE("sample grid provenance errors") {
    GridFixture fx;
    const auto out = tmpdir("griderr") / "g.ppm";
    CHECK_THROWS_AS(emit_sample_grid(fx.d_orig, fx.d_syn, fx.prov, 5, out), ReportError);
    auto broken = fx.prov;
    broken[1].content_id = 999999; // not in d_orig
    CHECK_THROWS_AS(emit_sample_grid(fx.d_orig, fx.d_syn, broken, 3, out), ReportError);
    CHECK_THROWS_AS(emit_sample_grid(fx.d_orig, fx.d_syn, fx.prov, 0, out), DomainError);
}
