// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "diffinject/errors.hpp"

namespace diffinject {

namespace {
constexpr char kMagic[4] = {'D', 'I', 'J', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
} // namespace

const ArrayRecord& Checkpoint::array(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw DomainError("checkpoint has no array named '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["meta"] = ckpt.meta_json.empty() ? nlohmann::json::object()
                                            : nlohmann::json::parse(ckpt.meta_json);
    auto dir = nlohmann::json::array();
    for (const auto& a : ckpt.arrays) {
        std::size_t n = 1;
        for (int d : a.shape) n *= static_cast<std::size_t>(d);
        if (n != a.data.size())
            throw DomainError("array '" + a.name + "' shape does not match data size");
        dir.push_back({{"name", a.name}, {"shape", a.shape}});
    }
    header["arrays"] = dir;
    const std::string htext = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot open checkpoint for write: " + path.string());
    f.write(kMagic, 4);
    write_u32(f, kVersion);
    write_u32(f, static_cast<std::uint32_t>(htext.size()));
    f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& a : ckpt.arrays)
        f.write(reinterpret_cast<const char*>(a.data.data()),
                static_cast<std::streamsize>(a.data.size() * sizeof(float)));
    if (!f) throw IngestError("short checkpoint write: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot open checkpoint: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IngestError("not a checkpoint file: " + path.string());
    const std::uint32_t version = read_u32(f);
    if (version != kVersion)
        throw IngestError("unsupported checkpoint version " + std::to_string(version) + " in " +
                          path.string());
    const std::uint32_t hlen = read_u32(f);
    std::string htext(hlen, '\0');
    f.read(htext.data(), hlen);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(htext);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError("corrupt checkpoint header in " + path.string() + ": " + e.what());
    }
    Checkpoint ckpt;
    ckpt.meta_json = header.at("meta").dump();
    for (const auto& d : header.at("arrays")) {
        ArrayRecord a;
        a.name = d.at("name").get<std::string>();
        a.shape = d.at("shape").get<std::vector<int>>();
        std::size_t n = 1;
        for (int dim : a.shape) n *= static_cast<std::size_t>(dim);
        a.data.resize(n);
        f.read(reinterpret_cast<char*>(a.data.data()),
               static_cast<std::streamsize>(n * sizeof(float)));
        if (f.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
            throw IngestError("truncated checkpoint payload in " + path.string());
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

} // namespace diffinject
