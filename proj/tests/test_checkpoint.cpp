// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "diffinject/checkpoint.hpp"
#include "diffinject/errors.hpp"

using namespace diffinject;
namespace fs = std::filesystem;

namespace {
fs::path tmpdir() {
    auto d = fs::temp_directory_path() / "diffinject-test-ckpt";
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Checkpoint sample_ckpt() {
    Checkpoint c;
    c.meta_json = R"({"kind":"test","seed":7})";
    c.arrays.push_back({"w", {2, 3}, {1, 2, 3, 4, 5, 6}});
    c.arrays.push_back({"b", {3}, {-1.5f, 0.f, 2.25f}});
    return c;
}
} // namespace

TEST_CASE("checkpoint round-trips meta and arrays") {
    const auto p = tmpdir() / "a.ckpt";
    save_checkpoint(p, sample_ckpt());
    const Checkpoint back = load_checkpoint(p);
    CHECK(back.meta_json == R"({"kind":"test","seed":7})");
    REQUIRE(back.arrays.size() == 2);
    CHECK(back.array("w").shape == std::vector<int>{2, 3});
    CHECK(back.array("w").data == std::vector<float>{1, 2, 3, 4, 5, 6});
    CHECK(back.array("b").data[2] == 2.25f);
    CHECK_THROWS_AS(back.array("missing"), DomainError);
}

TEST_CASE("checkpoint writing is byte-deterministic") {
    const auto p1 = tmpdir() / "d1.ckpt";
    const auto p2 = tmpdir() / "d2.ckpt";
    save_checkpoint(p1, sample_ckpt());
    save_checkpoint(p2, sample_ckpt());
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("bad magic and truncation are rejected") {
    const auto p = tmpdir() / "bad.ckpt";
    {
        std::ofstream f(p, std::ios::binary);
        f << "NOPE garbage";
    }
    CHECK_THROWS_AS(load_checkpoint(p), IngestError);

    const auto good = tmpdir() / "good.ckpt";
    save_checkpoint(good, sample_ckpt());
    const std::string bytes = slurp(good);
    const auto trunc = tmpdir() / "trunc.ckpt";
    {
        std::ofstream f(trunc, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
    }
    CHECK_THROWS_AS(load_checkpoint(trunc), IngestError);
    CHECK_THROWS_AS(load_checkpoint(tmpdir() / "absent.ckpt"), IngestError);
}
