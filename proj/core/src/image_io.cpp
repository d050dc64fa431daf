// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "diffinject/errors.hpp"

namespace diffinject {

void write_raster(const std::filesystem::path& path, const Tensor& img01) {
    if (img01.c != 1 && img01.c != 3)
        throw DomainError("write_raster: channel count must be 1 or 3, got " +
                          std::to_string(img01.c));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot open for write: " + path.string());
    f << (img01.c == 3 ? "P6" : "P5") << "\n" << img01.w << " " << img01.h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img01.w) * img01.c);
    for (int y = 0; y < img01.h; ++y) {
        for (int x = 0; x < img01.w; ++x)
            for (int ci = 0; ci < img01.c; ++ci) {
                const float v = std::clamp(img01.at(ci, y, x), 0.f, 1.f);
                row[static_cast<size_t>(x) * img01.c + ci] =
                    static_cast<unsigned char>(std::lround(v * 255.f));
            }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw IngestError("short write: " + path.string());
}

namespace {
int next_token(std::istream& in) {
    // Skips whitespace and '#' comments per the netpbm header grammar.
    while (true) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int value;
    in >> value;
    return value;
}
} // namespace

Tensor read_raster(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot open: " + path.string());
    std::string magic;
    f >> magic;
    int channels;
    if (magic == "P6")
        channels = 3;
    else if (magic == "P5")
        channels = 1;
    else
        throw IngestError("unsupported raster format '" + magic + "' in " + path.string());
    const int w = next_token(f);
    const int h = next_token(f);
    const int maxval = next_token(f);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw IngestError("bad raster header in " + path.string());
    f.get(); // single whitespace after maxval
    const int bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * channels * bytes_per);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (f.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IngestError("truncated raster data in " + path.string());
    Tensor img(channels, h, w);
    const float fmax = static_cast<float>(maxval);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ci = 0; ci < channels; ++ci) {
                const size_t idx = ((static_cast<size_t>(y) * w + x) * channels + ci) * bytes_per;
                int v = raw[idx];
                if (bytes_per == 2) v = (v << 8) | raw[idx + 1];
                // Division (not reciprocal multiply) so v/maxval reproduces
                // quantized values exactly; clamps out-of-range encodings.
                img.at(ci, y, x) = std::clamp(static_cast<float>(v) / fmax, 0.f, 1.f);
            }
    return img;
}

Tensor resize(const Tensor& img, int side) {
    if (img.h == side && img.w == side) return img;
    Tensor out(img.c, side, side);
    const float sy = static_cast<float>(img.h) / side;
    const float sx = static_cast<float>(img.w) / side;
    for (int y = 0; y < side; ++y) {
        const float fy = (y + 0.5f) * sy - 0.5f;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.h - 1);
        const int y1 = std::min(y0 + 1, img.h - 1);
        const float wy = std::clamp(fy - y0, 0.f, 1.f);
        for (int x = 0; x < side; ++x) {
            const float fx = (x + 0.5f) * sx - 0.5f;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.w - 1);
            const int x1 = std::min(x0 + 1, img.w - 1);
            const float wx = std::clamp(fx - x0, 0.f, 1.f);
            for (int ci = 0; ci < img.c; ++ci) {
                const float top = img.at(ci, y0, x0) * (1 - wx) + img.at(ci, y0, x1) * wx;
                const float bot = img.at(ci, y1, x0) * (1 - wx) + img.at(ci, y1, x1) * wx;
                out.at(ci, y, x) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

} // namespace diffinject
