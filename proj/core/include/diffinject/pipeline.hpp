// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>

#include "diffinject/config.hpp"
#include "diffinject/injector.hpp"

namespace diffinject {

struct SyntheticProvenance {
    std::int64_t content_id = 0;
    std::int64_t original_id = 0;
    double gamma = 0.0;
    int t_edit = 0;
    int t_boost = 0;
    std::uint64_t seed = 0;
    int assigned_label = 0;
};

// Line-delimited provenance records:
//   content_id,original_id,gamma,t_edit,t_boost,seed,assigned_label
void save_provenance(const std::filesystem::path& path,
                     const std::vector<SyntheticProvenance>& records);
std::vector<SyntheticProvenance> load_provenance(const std::filesystem::path& path);

// Synthesizes one bias-conflict sample: the content sample's h-trajectory is
// injected into the original's DDIM reversal; label comes from the content.
Sample synthesize_sample(const Sample& content, const LatentTrajectory& content_traj,
                         const Sample& original, BottleneckModel& model,
                         const NoiseSchedule& schedule, const InjectionConfig& cfg,
                         std::uint64_t job_seed, std::int64_t new_id);

// Resolved injection windows (after t_edit calibration and t_boost scaling).
struct ResolvedInjection {
    InjectionConfig base; // mask filled per-sample when mode == "auto"
    std::string mask_mode;
    int t_edit = 0;
    int t_boost = 0;
};
ResolvedInjection resolve_injection(const InjectionSettings& settings, Denoiser& denoiser,
                                    const NoiseSchedule& schedule, const Dataset& d_orig);

// Builds D_syn: round(bias_conflict_ratio_syn * |D_orig|) samples pairing
// top-K contents (with replacement) with non-top-K originals of the same
// class. Never consults ground-truth bias labels.
Dataset build_syn_dataset(const LossRanking& topk, const Dataset& d_orig, Denoiser& denoiser,
                          const DiffusionConfig& dcfg, const InjectionSettings& inj,
                          const PipelineSettings& pcfg, std::uint64_t seed,
                          std::vector<SyntheticProvenance>* provenance = nullptr);

struct StageInfo {
    std::string name;
    std::string path;
    double seconds = 0.0;
    bool skipped = false;
};

struct ExperimentRecord {
    std::uint64_t seed = 0;
    std::vector<StageInfo> stages;
    EvalResult bias_train;       // f_B on the train split (reporting only)
    EvalResult vanilla_test;     // baseline on the unbiased test set
    EvalResult debiased_test;
    int t_edit = 0, t_boost = 0;
    int n_orig = 0, n_syn = 0;
    std::string metrics_path;
    std::string record_path;
};

// Stage-by-stage experiment driver with a content-addressed artifact store
// under <out>/stages/<stage>-<hash>/. With resume=true, stages whose marker
// matches the config hash chain are skipped and their artifacts reloaded.
class Experiment {
public:
    Experiment(RunConfig cfg, std::filesystem::path out, bool resume);

    std::filesystem::path gen_data();       // -> dir with train/ and test/
    std::filesystem::path train_bias();     // -> dir with classifier.ckpt
    std::filesystem::path extract_topk();   // -> dir with ranking.csv
    std::filesystem::path train_diffusion();// -> dir with denoiser.ckpt, schedule.csv
    std::filesystem::path inject();         // -> dir with syn/ dataset + provenance.csv
    std::filesystem::path train_debiased(); // -> dir with classifier.ckpt (on D_total)
    std::filesystem::path train_vanilla();  // -> dir with classifier.ckpt (on D_orig)
    ExperimentRecord evaluate_and_record(); // writes metrics.json + record.json

    ExperimentRecord run(); // full pipeline

    const RunConfig& config() const { return cfg_; }

private:
    using StageFn = std::function<void(const std::filesystem::path&)>;
    std::filesystem::path run_stage(const std::string& name, const std::string& hash,
                                    const StageFn& body);
    std::string stage_hash(const std::string& name) const;

    RunConfig cfg_;
    std::filesystem::path out_;
    bool resume_;
    std::vector<StageInfo> stages_;
    std::map<std::string, std::filesystem::path> done_;
};

// D_total = D_syn (may be empty) unioned with D_orig; no deduplication.
Dataset union_datasets(const Dataset& d_orig, const Dataset& d_syn);

} // namespace diffinject
