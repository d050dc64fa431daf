// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "diffinject/errors.hpp"
#include "diffinject/pipeline.hpp"
#include "diffinject/report.hpp"

namespace {

using namespace diffinject;
using nlohmann::json;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool fresh = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-c,--config", o.config_path, "Run configuration file (JSON)");
    cmd->add_option("-o,--out", o.out_dir, "Output directory (default: config out_root)");
    cmd->add_option("-s,--seed", o.seed, "Override the global seed")
        ->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_flag("--fresh", o.fresh, "Ignore cached stage artifacts");
}

Experiment make_experiment(const CommonOpts& o) {
    RunConfig cfg = o.config_path.empty() ? default_config() : load_config(o.config_path);
    if (o.seed_set) cfg.seed = o.seed;
    if (const char* w = std::getenv("DIFFINJECT_WORKERS")) cfg.pipeline.workers = std::stoi(w);
    std::string out = o.out_dir;
    if (out.empty())
        if (const char* e = std::getenv("DIFFINJECT_OUT")) out = e;
    if (out.empty()) out = cfg.out_root;
    return Experiment(std::move(cfg), out, !o.fresh);
}

void print_record(const ExperimentRecord& rec) {
    auto pct = [](double v) { return static_cast<int>(v * 10000) / 100.0; };
    std::cout << "seed " << rec.seed << ": vanilla overall " << pct(rec.vanilla_test.overall)
              << "% conflict " << pct(rec.vanilla_test.conflict) << "% | debiased overall "
              << pct(rec.debiased_test.overall) << "% conflict " << pct(rec.debiased_test.conflict)
              << "%\n";
}

// Reads one run directory (metrics.json + record.json) into table rows.
void collect_rows(const std::filesystem::path& run_dir, MetricsTable& table) {
    std::ifstream f(run_dir / "metrics.json");
    if (!f) throw ReportError("no metrics.json in " + run_dir.string());
    json m = json::parse(f);
    MetricsRow base;
    base.rho = m.at("conflict_ratio").get<double>();
    base.bias_kind = m.at("bias_kind").get<std::string>();
    base.seed = m.at("seed").get<std::uint64_t>();
    for (const char* method : {"vanilla", "diffinject"}) {
        MetricsRow r = base;
        r.method = method;
        const auto& e = m.at(std::string(method) == "vanilla" ? "vanilla_test" : "debiased_test");
        r.overall = e.at("overall").get<double>();
        r.aligned = e.at("aligned").get<double>();
        r.conflict = e.at("conflict").get<double>();
        table.rows.push_back(r);
    }
}

std::filesystem::path stage_dir(const std::filesystem::path& run_dir, const std::string& stage) {
    std::ifstream f(run_dir / "record.json");
    if (!f) throw ReportError("no record.json in " + run_dir.string());
    json rec = json::parse(f);
    for (const auto& s : rec.at("stages"))
        if (s.at("name").get<std::string>() == stage) return s.at("path").get<std::string>();
    throw ReportError("run record has no '" + stage + "' stage: " + run_dir.string());
}

int run_report(const std::vector<std::string>& run_dirs, const std::string& out_dir,
               int grid_rows) {
    MetricsTable table;
    for (const auto& d : run_dirs) collect_rows(d, table);
    std::filesystem::create_directories(out_dir);
    emit_table(table, std::filesystem::path(out_dir) / "table");

    // Figure rows come from the first run's inject artifacts.
    const auto data_dir = stage_dir(run_dirs.front(), "gen-data");
    const auto inject_dir = stage_dir(run_dirs.front(), "inject");
    const Dataset d_orig = load_dataset(data_dir / "train");
    const Dataset d_syn = load_dataset(inject_dir / "syn");
    const auto prov = load_provenance(inject_dir / "provenance.csv");
    const int n = std::min<int>(grid_rows, static_cast<int>(d_syn.samples.size()));
    emit_sample_grid(d_orig, d_syn, prov, n, std::filesystem::path(out_dir) / "samples.ppm");
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DiffInject: dataset debiasing via diffusion h-space content injection"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::vector<std::string> run_dirs;
    std::string report_out = "report";
    int grid_rows = 6;

    const char* stage_cmds[] = {"gen-data",  "train-bias",    "extract-topk", "train-diffusion",
                                "inject",    "train-debiased"};
    const char* stage_help[] = {
        "Generate (or ingest) the biased train set and unbiased test set",
        "Overfit the bias classifier f_B with generalized cross entropy",
        "Rank training samples by f_B cross-entropy loss and keep the top K",
        "Train the P2-weighted diffusion denoiser on the biased train set",
        "Synthesize bias-conflict samples by h-space content injection",
        "Retrain the classifier on the original + synthetic union"};
    for (int i = 0; i < 6; ++i) add_common(app.add_subcommand(stage_cmds[i], stage_help[i]), opts);
    add_common(app.add_subcommand("evaluate", "Evaluate vanilla and debiased classifiers"), opts);
    add_common(app.add_subcommand("run", "Run the full pipeline end to end"), opts);

    auto* rep = app.add_subcommand("report", "Emit metrics tables and sample grids from runs");
    rep->add_option("--run", run_dirs, "Run output directory (repeatable)")->required();
    rep->add_option("--out", report_out, "Report output directory");
    rep->add_option("--rows", grid_rows, "Sample grid rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "report") return run_report(run_dirs, report_out, grid_rows);
        Experiment exp = make_experiment(opts);
        if (cmd == "gen-data") std::cout << exp.gen_data().string() << "\n";
        else if (cmd == "train-bias") std::cout << exp.train_bias().string() << "\n";
        else if (cmd == "extract-topk") std::cout << exp.extract_topk().string() << "\n";
        else if (cmd == "train-diffusion") std::cout << exp.train_diffusion().string() << "\n";
        else if (cmd == "inject") std::cout << exp.inject().string() << "\n";
        else if (cmd == "train-debiased") std::cout << exp.train_debiased().string() << "\n";
        else if (cmd == "evaluate") print_record(exp.evaluate_and_record());
        else if (cmd == "run") print_record(exp.run());
        return 0;
    } catch (const StageError& e) {
        std::cerr << e.stage() << "\n" << "category=" << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << cmd << "\n" << "category=" << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << cmd << "\n" << "category=internal: " << e.what() << "\n";
        return 1;
    }
}
