// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "diffinject/errors.hpp"
#include "diffinject/image_io.hpp"

namespace diffinject {

namespace {

constexpr char kHeader[] = "method,rho,bias_kind,seed,overall,aligned,conflict";

struct GroupStats {
    std::string method;
    double rho;
    std::string bias_kind;
    int n_seeds;
    double mean[3], sd[3]; // overall, aligned, conflict
};

// Sample standard deviation (n-1); 3 seeds at {0.60, 0.62, 0.64} give 0.02.
double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(prec) << v;
    return ss.str();
}

} // namespace

void emit_table(const MetricsTable& table, const std::filesystem::path& stem) {
    if (table.rows.empty()) throw DomainError("emit_table: no records");
    for (const auto& r : table.rows)
        for (double v : {r.overall, r.aligned, r.conflict})
            if (!(v >= 0.0 && v <= 1.0))
                throw DomainError("emit_table: accuracy out of [0,1]");

    // Line-delimited data first; this file round-trips through
    // load_metrics_rows.
    {
        auto csv = stem;
        csv += ".csv";
        std::ofstream f(csv);
        if (!f) throw ReportError("cannot write " + csv.string());
        f << kHeader << "\n";
        f.precision(17);
        for (const auto& r : table.rows)
            f << r.method << "," << r.rho << "," << r.bias_kind << "," << r.seed << ","
              << r.overall << "," << r.aligned << "," << r.conflict << "\n";
    }

    // Aggregate by (method, rho) in first-appearance order.
    std::vector<GroupStats> groups;
    for (const auto& r : table.rows) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const GroupStats& g) {
            return g.method == r.method && g.rho == r.rho;
        });
        if (it == groups.end())
            groups.push_back({r.method, r.rho, r.bias_kind, 0, {0, 0, 0}, {0, 0, 0}});
    }
    for (auto& g : groups) {
        std::vector<double> cols[3];
        for (const auto& r : table.rows)
            if (r.method == g.method && r.rho == g.rho) {
                cols[0].push_back(r.overall);
                cols[1].push_back(r.aligned);
                cols[2].push_back(r.conflict);
            }
        g.n_seeds = static_cast<int>(cols[0].size());
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (double v : cols[c]) sum += v;
            g.mean[c] = sum / static_cast<double>(cols[c].size());
            g.sd[c] = sample_std(cols[c], g.mean[c]);
        }
    }

    double best[3] = {-1, -1, -1};
    for (const auto& g : groups)
        for (int c = 0; c < 3; ++c) best[c] = std::max(best[c], g.mean[c]);

    auto txt = stem;
    txt += ".txt";
    std::ofstream f(txt);
    if (!f) throw ReportError("cannot write " + txt.string());
    f << std::left << std::setw(12) << "method" << std::setw(8) << "rho" << std::setw(10)
      << "bias_kind" << std::setw(7) << "seeds" << std::setw(20) << "overall" << std::setw(20)
      << "aligned" << std::setw(20) << "conflict" << "\n";
    for (const auto& g : groups) {
        f << std::left << std::setw(12) << g.method << std::setw(8) << fmt(g.rho, 3)
          << std::setw(10) << g.bias_kind << std::setw(7) << g.n_seeds;
        for (int c = 0; c < 3; ++c) {
            std::string cell = fmt(g.mean[c]);
            if (g.n_seeds > 1) cell += " +/- " + fmt(g.sd[c]);
            if (g.mean[c] == best[c]) cell += " *";
            f << std::setw(20) << cell;
        }
        f << "\n";
    }
}

MetricsTable load_metrics_rows(const std::filesystem::path& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw ReportError("cannot open " + csv_path.string());
    std::string line;
    std::getline(f, line);
    if (line != kHeader) throw ManifestError("bad metrics header in " + csv_path.string());
    MetricsTable t;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricsRow r;
        std::string tok;
        std::getline(ss, r.method, ',');
        std::getline(ss, tok, ','); r.rho = std::stod(tok);
        std::getline(ss, r.bias_kind, ',');
        std::getline(ss, tok, ','); r.seed = std::stoull(tok);
        std::getline(ss, tok, ','); r.overall = std::stod(tok);
        std::getline(ss, tok, ','); r.aligned = std::stod(tok);
        std::getline(ss, tok, ','); r.conflict = std::stod(tok);
        t.rows.push_back(r);
    }
    return t;
}

Tensor emit_sample_grid(const Dataset& d_orig, const Dataset& d_syn,
                        const std::vector<SyntheticProvenance>& provenance, int n,
                        const std::filesystem::path& out_path) {
    if (n < 1) throw DomainError("emit_sample_grid: n must be >= 1");
    if (static_cast<std::size_t>(n) > d_syn.samples.size() ||
        static_cast<std::size_t>(n) > provenance.size())
        throw ReportError("emit_sample_grid: fewer than n synthetic samples with provenance");
    if (d_orig.samples.empty()) throw DomainError("emit_sample_grid: empty original dataset");

    const int cell_h = d_orig.samples[0].image.h;
    const int cell_w = d_orig.samples[0].image.w;
    const int margin = 2;
    const int H = n * cell_h + (n + 1) * margin;
    const int W = 3 * cell_w + 4 * margin;
    Tensor grid(3, H, W);
    std::fill(grid.v.begin(), grid.v.end(), 1.0f); // white gutters

    auto blit = [&](const Tensor& img, int row, int col) {
        const int y0 = margin + row * (cell_h + margin);
        const int x0 = margin + col * (cell_w + margin);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < cell_h; ++y)
                for (int x = 0; x < cell_w; ++x)
                    grid.at(c, y0 + y, x0 + x) = img.at(img.c == 3 ? c : 0, y, x);
    };

    for (int i = 0; i < n; ++i) {
        const auto& p = provenance[i];
        const Sample* original = d_orig.find(p.original_id);
        const Sample* content = d_orig.find(p.content_id);
        if (!original || !content)
            throw ReportError("emit_sample_grid: provenance row " + std::to_string(i) +
                              " references an unknown sample id");
        blit(original->image, i, 0);
        blit(content->image, i, 1);
        blit(d_syn.samples[i].image, i, 2);
    }

    write_raster(out_path, grid);
    return grid;
}

} // namespace diffinject
