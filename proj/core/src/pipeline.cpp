// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "diffinject/bias_bench.hpp"
#include "diffinject/errors.hpp"
#include "diffinject/image_io.hpp"

namespace diffinject {

using nlohmann::json;

void save_provenance(const std::filesystem::path& path,
                     const std::vector<SyntheticProvenance>& records) {
    std::ofstream f(path);
    if (!f) throw IngestError("cannot write provenance: " + path.string());
    f << "content_id,original_id,gamma,t_edit,t_boost,seed,assigned_label\n";
    f.precision(17);
    for (const auto& r : records)
        f << r.content_id << "," << r.original_id << "," << r.gamma << "," << r.t_edit << ","
          << r.t_boost << "," << r.seed << "," << r.assigned_label << "\n";
}

std::vector<SyntheticProvenance> load_provenance(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open provenance: " + path.string());
    std::string line;
    std::getline(f, line);
    if (line != "content_id,original_id,gamma,t_edit,t_boost,seed,assigned_label")
        throw ManifestError("bad provenance header in " + path.string());
    std::vector<SyntheticProvenance> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        SyntheticProvenance r;
        std::string t;
        std::getline(ss, t, ','); r.content_id = std::stoll(t);
        std::getline(ss, t, ','); r.original_id = std::stoll(t);
        std::getline(ss, t, ','); r.gamma = std::stod(t);
        std::getline(ss, t, ','); r.t_edit = std::stoi(t);
        std::getline(ss, t, ','); r.t_boost = std::stoi(t);
        std::getline(ss, t, ','); r.seed = std::stoull(t);
        std::getline(ss, t, ','); r.assigned_label = std::stoi(t);
        out.push_back(r);
    }
    return out;
}

Sample synthesize_sample(const Sample& content, const LatentTrajectory& content_traj,
                         const Sample& original, BottleneckModel& model,
                         const NoiseSchedule& schedule, const InjectionConfig& cfg,
                         std::uint64_t job_seed, std::int64_t new_id) {
    const LatentTrajectory orig_traj = ddim_invert(to_model_range(original.image), model, schedule);
    Rng boost_rng(job_seed);
    Sample s;
    s.image = reverse_with_injection(orig_traj.x_T, content_traj, model, schedule, cfg, &boost_rng);
    s.class_label = content.class_label;
    s.bias_label = -1; // unknown by construction
    s.is_conflict = false;
    s.sample_id = new_id;
    return s;
}

ResolvedInjection resolve_injection(const InjectionSettings& settings, Denoiser& denoiser,
                                    const NoiseSchedule& schedule, const Dataset& d_orig) {
    ResolvedInjection r;
    r.mask_mode = settings.mask;
    r.t_boost = settings.t_boost >= 0
                    ? settings.t_boost
                    : static_cast<int>(std::lround(0.2 * schedule.T));
    if (settings.t_edit >= 0) {
        r.t_edit = settings.t_edit;
    } else {
        std::vector<Tensor> calib;
        const int n = std::min<int>(settings.calibration_images,
                                    static_cast<int>(d_orig.samples.size()));
        for (int i = 0; i < n; ++i) calib.push_back(d_orig.samples[i].image);
        r.t_edit = compute_t_edit(denoiser, schedule, calib, patch_stats_distance,
                                  settings.distance_threshold);
        // A calibrated edit boundary below the boost window would make the
        // config invalid; clamp up.
        r.t_edit = std::max(r.t_edit, r.t_boost);
    }
    r.base.gamma = settings.gamma;
    r.base.eta_boost = settings.eta_boost;
    r.base.t_edit = r.t_edit;
    r.base.t_boost = r.t_boost;
    if (settings.mask != "none" && settings.mask != "auto") {
        const Tensor m = read_raster(settings.mask);
        const auto bs = denoiser.bottleneck_shape();
        if (m.c != 1 || m.h != bs[1] || m.w != bs[2])
            throw ConfigError("mask file does not match bottleneck resolution");
        Tensor bin = m;
        for (float& v : bin.v) v = v > 0.5f ? 1.f : 0.f;
        r.base.mask = bin;
    }
    r.base.validate(schedule.T, denoiser.bottleneck_shape());
    return r;
}

Dataset build_syn_dataset(const LossRanking& topk, const Dataset& d_orig, Denoiser& denoiser,
                          const DiffusionConfig& dcfg, const InjectionSettings& inj,
                          const PipelineSettings& pcfg, std::uint64_t seed,
                          std::vector<SyntheticProvenance>* provenance) {
    if (topk.entries.empty()) throw DomainError("build_syn_dataset: empty top-K ranking");
    const NoiseSchedule schedule = dcfg.schedule();
    const ResolvedInjection res = resolve_injection(inj, denoiser, schedule, d_orig);

    const int n_syn = static_cast<int>(
        std::lround(pcfg.bias_conflict_ratio_syn * static_cast<double>(d_orig.samples.size())));

    std::unordered_set<std::int64_t> topk_ids;
    for (const auto& e : topk.entries) topk_ids.insert(e.sample_id);

    // Originals pool: non-top-K samples, grouped by class when pairing is
    // class-constrained. Bias labels are never consulted.
    std::unordered_map<int, std::vector<const Sample*>> pool;
    for (const auto& s : d_orig.samples)
        if (!topk_ids.count(s.sample_id)) pool[pcfg.same_class_pairing ? s.class_label : 0].push_back(&s);

    struct Job {
        const Sample* content;
        const Sample* original;
        std::uint64_t seed;
        std::int64_t id;
    };
    std::vector<Job> jobs;
    Rng pair_rng(Rng::stream_seed(seed, "pair"));
    for (int j = 0; j < n_syn; ++j) {
        const auto& entry = topk.entries[pair_rng.uniform_int(0, topk.entries.size() - 1)];
        const Sample* content = d_orig.find(entry.sample_id);
        if (!content) throw DomainError("top-K id not present in dataset");
        const int key = pcfg.same_class_pairing ? content->class_label : 0;
        auto it = pool.find(key);
        if (it == pool.end() || it->second.empty())
            throw PairingError("no non-top-K original available for class " +
                               std::to_string(content->class_label));
        const Sample* original = it->second[pair_rng.uniform_int(0, it->second.size() - 1)];
        jobs.push_back({content, original, Rng::stream_seed(seed, "inject-job", j),
                        2000000 + j});
    }

    // Content trajectories are reused across jobs; invert each content once.
    std::unordered_map<std::int64_t, LatentTrajectory> content_trajs;
    for (const auto& job : jobs)
        if (!content_trajs.count(job.content->sample_id))
            content_trajs[job.content->sample_id] =
                ddim_invert(to_model_range(job.content->image), denoiser, schedule);

    const auto bs = denoiser.bottleneck_shape();
    auto config_for = [&](const Job& job) {
        InjectionConfig c = res.base;
        if (res.mask_mode == "auto") c.mask = foreground_mask(job.original->image, bs[1], bs[2]);
        return c;
    };

    std::vector<Sample> results(jobs.size());
    const int workers = std::min<int>(pcfg.workers, static_cast<int>(jobs.size()));
    if (workers <= 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j)
            results[j] = synthesize_sample(*jobs[j].content,
                                           content_trajs.at(jobs[j].content->sample_id),
                                           *jobs[j].original, denoiser, schedule, config_for(jobs[j]),
                                           jobs[j].seed, jobs[j].id);
    } else {
        // Independent jobs fan out over cloned denoiser handles.
        std::vector<std::thread> threads;
        std::exception_ptr first_error;
        std::mutex err_mu;
        for (int w = 0; w < workers; ++w)
            threads.emplace_back([&, w]() {
                Denoiser local = denoiser;
                try {
                    for (std::size_t j = w; j < jobs.size(); j += workers)
                        results[j] = synthesize_sample(
                            *jobs[j].content, content_trajs.at(jobs[j].content->sample_id),
                            *jobs[j].original, local, schedule, config_for(jobs[j]), jobs[j].seed,
                            jobs[j].id);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    Dataset d_syn;
    d_syn.spec = d_orig.spec;
    d_syn.split = Split::train;
    d_syn.samples = std::move(results);
    if (provenance) {
        provenance->clear();
        for (const auto& job : jobs)
            provenance->push_back({job.content->sample_id, job.original->sample_id, res.base.gamma,
                                   res.t_edit, res.t_boost, job.seed, job.content->class_label});
    }
    return d_syn;
}

Dataset union_datasets(const Dataset& d_orig, const Dataset& d_syn) {
    Dataset total = d_orig;
    total.samples.insert(total.samples.end(), d_syn.samples.begin(), d_syn.samples.end());
    return total;
}

// ---- Experiment ---------------------------------------------------------

Experiment::Experiment(RunConfig cfg, std::filesystem::path out, bool resume)
    : cfg_(std::move(cfg)), out_(std::move(out)), resume_(resume) {
    cfg_.validate();
}

std::string Experiment::stage_hash(const std::string& name) const {
    // Hash chain over the full config + seed + stage name: any config change
    // invalidates all cached stages.
    std::uint64_t h = fnv1a64(serialize_config(cfg_));
    h = splitmix64(h ^ cfg_.seed);
    h = splitmix64(h ^ fnv1a64(name));
    std::ostringstream ss;
    ss << std::hex << (h & 0xffffffffULL);
    return ss.str();
}

std::filesystem::path Experiment::run_stage(const std::string& name, const std::string& hash,
                                            const StageFn& body) {
    const auto dir = out_ / "stages" / (name + "-" + hash);
    if (auto it = done_.find(name); it != done_.end()) return it->second;
    const auto marker = dir / ".done";
    StageInfo info{name, dir.string(), 0.0, false};
    if (resume_ && std::filesystem::exists(marker)) {
        std::ifstream m(marker);
        std::string stored;
        m >> stored;
        if (stored == hash) {
            info.skipped = true;
            stages_.push_back(info);
            done_[name] = dir;
            return dir;
        }
    }
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(dir);
    } catch (const Error& e) {
        throw StageError(name, e.category(), e.what());
    } catch (const std::exception& e) {
        throw StageError(name, "internal", e.what());
    }
    info.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream m(marker);
    m << hash << "\n";
    stages_.push_back(info);
    done_[name] = dir;
    return dir;
}

std::filesystem::path Experiment::gen_data() {
    return run_stage("gen-data", stage_hash("gen-data"), [&](const std::filesystem::path& dir) {
        if (!cfg_.data.path.empty()) {
            Dataset ds = ingest_folder(cfg_.data.path, cfg_.data.manifest, cfg_.data.spec.image_size);
            save_dataset(dir / "train", ds);
            save_dataset(dir / "test", ds); // external data: no held-out unbiased split
            return;
        }
        DatasetSpec spec = cfg_.data.spec;
        spec.seed = Rng::stream_seed(cfg_.seed, "gen-data");
        auto [train, test] = generate_dataset(spec);
        save_dataset(dir / "train", train);
        save_dataset(dir / "test", test);
    });
}

std::filesystem::path Experiment::train_bias() {
    const auto data_dir = gen_data();
    return run_stage("train-bias", stage_hash("train-bias"), [&](const std::filesystem::path& dir) {
        const Dataset train = load_dataset(data_dir / "train");
        ClassifierConfig cc = cfg_.bias_classifier;
        cc.seed = Rng::stream_seed(cfg_.seed, "train-bias");
        TrainResult res = train_bias_classifier(train, cc);
        save_classifier(dir / "classifier.ckpt", res.model, cc);
        std::ofstream rec(dir / "train_record.csv");
        rec << "epoch,mean_gce_loss\n";
        rec.precision(17);
        for (const auto& e : res.epochs) rec << e.epoch << "," << e.mean_loss << "\n";
    });
}

std::filesystem::path Experiment::extract_topk() {
    const auto data_dir = gen_data();
    const auto bias_dir = train_bias();
    return run_stage("extract-topk", stage_hash("extract-topk"),
                     [&](const std::filesystem::path& dir) {
                         const Dataset train = load_dataset(data_dir / "train");
                         auto [model, cc] = load_classifier(bias_dir / "classifier.ckpt");
                         const LossRanking ranking = rank_by_ce_loss(model, train, cfg_.pipeline.k);
                         save_ranking(dir / "ranking.csv", ranking);
                     });
}

std::filesystem::path Experiment::train_diffusion() {
    const auto data_dir = gen_data();
    return run_stage("train-diffusion", stage_hash("train-diffusion"),
                     [&](const std::filesystem::path& dir) {
                         const Dataset train = load_dataset(data_dir / "train");
                         DiffusionConfig dc = cfg_.diffusion;
                         dc.seed = Rng::stream_seed(cfg_.seed, "train-diffusion");
                         DiffusionTrainRecord rec;
                         Denoiser denoiser = diffinject::train_diffusion(train, dc, &rec);
                         save_denoiser(dir / "denoiser.ckpt", denoiser, dc);
                         export_schedule(dir / "schedule.csv", dc.schedule(), dc.p2());
                         std::ofstream lf(dir / "loss.csv");
                         lf << "step,loss\n";
                         lf.precision(17);
                         for (std::size_t i = 0; i < rec.step_loss.size(); ++i)
                             lf << i << "," << rec.step_loss[i] << "\n";
                     });
}

std::filesystem::path Experiment::inject() {
    const auto data_dir = gen_data();
    const auto topk_dir = extract_topk();
    const auto diff_dir = train_diffusion();
    return run_stage("inject", stage_hash("inject"), [&](const std::filesystem::path& dir) {
        const Dataset train = load_dataset(data_dir / "train");
        const LossRanking topk = load_ranking(topk_dir / "ranking.csv");
        auto [denoiser, dc] = load_denoiser(diff_dir / "denoiser.ckpt");
        std::vector<SyntheticProvenance> prov;
        const Dataset d_syn =
            build_syn_dataset(topk, train, denoiser, dc, cfg_.injection, cfg_.pipeline,
                              Rng::stream_seed(cfg_.seed, "inject"), &prov);
        save_dataset(dir / "syn", d_syn);
        save_provenance(dir / "provenance.csv", prov);
    });
}

std::filesystem::path Experiment::train_debiased() {
    const auto data_dir = gen_data();
    const auto inject_dir = inject();
    return run_stage("train-debiased", stage_hash("train-debiased"),
                     [&](const std::filesystem::path& dir) {
                         const Dataset d_orig = load_dataset(data_dir / "train");
                         const Dataset d_syn = load_dataset(inject_dir / "syn");
                         const Dataset d_total = union_datasets(d_orig, d_syn);
                         ClassifierConfig cc = cfg_.debiased_classifier;
                         cc.seed = Rng::stream_seed(cfg_.seed, "train-debiased");
                         TrainResult res = train_debiased_classifier(d_total, cc);
                         save_classifier(dir / "classifier.ckpt", res.model, cc);
                     });
}

std::filesystem::path Experiment::train_vanilla() {
    const auto data_dir = gen_data();
    return run_stage("train-vanilla", stage_hash("train-vanilla"),
                     [&](const std::filesystem::path& dir) {
                         const Dataset d_orig = load_dataset(data_dir / "train");
                         ClassifierConfig cc = cfg_.debiased_classifier;
                         cc.seed = Rng::stream_seed(cfg_.seed, "train-vanilla");
                         TrainResult res = train_debiased_classifier(d_orig, cc);
                         save_classifier(dir / "classifier.ckpt", res.model, cc);
                     });
}

ExperimentRecord Experiment::evaluate_and_record() {
    const auto data_dir = gen_data();
    const auto bias_dir = train_bias();
    const auto inject_dir = inject();
    const auto debiased_dir = train_debiased();
    const auto vanilla_dir = train_vanilla();

    ExperimentRecord rec;
    rec.seed = cfg_.seed;
    const Dataset train = load_dataset(data_dir / "train");
    const Dataset test = load_dataset(data_dir / "test");
    {
        auto [bias_model, cc] = load_classifier(bias_dir / "classifier.ckpt");
        rec.bias_train = evaluate(bias_model, train);
    }
    {
        auto [vanilla, cc] = load_classifier(vanilla_dir / "classifier.ckpt");
        rec.vanilla_test = evaluate(vanilla, test);
    }
    {
        auto [debiased, cc] = load_classifier(debiased_dir / "classifier.ckpt");
        rec.debiased_test = evaluate(debiased, test);
    }
    const auto prov = load_provenance(inject_dir / "provenance.csv");
    if (!prov.empty()) {
        rec.t_edit = prov.front().t_edit;
        rec.t_boost = prov.front().t_boost;
    }
    rec.n_orig = static_cast<int>(train.samples.size());
    rec.n_syn = static_cast<int>(prov.size());
    rec.stages = stages_;

    auto eval_json = [](const EvalResult& e) {
        return json{{"overall", e.overall}, {"aligned", e.aligned},     {"conflict", e.conflict},
                    {"n", e.n},             {"n_aligned", e.n_aligned}, {"n_conflict", e.n_conflict}};
    };
    // metrics.json is deterministic (no timings); record.json carries
    // wall-clock times and is allowed to differ between reruns.
    json metrics;
    metrics["seed"] = cfg_.seed;
    metrics["conflict_ratio"] = cfg_.data.spec.conflict_ratio;
    metrics["bias_kind"] = to_string(cfg_.data.spec.bias_kind);
    metrics["n_orig"] = rec.n_orig;
    metrics["n_syn"] = rec.n_syn;
    metrics["t_edit"] = rec.t_edit;
    metrics["t_boost"] = rec.t_boost;
    metrics["bias_train"] = eval_json(rec.bias_train);
    metrics["vanilla_test"] = eval_json(rec.vanilla_test);
    metrics["debiased_test"] = eval_json(rec.debiased_test);
    const auto metrics_path = out_ / "metrics.json";
    {
        std::ofstream f(metrics_path);
        f << metrics.dump(2) << "\n";
    }
    json record = metrics;
    record["stages"] = json::array();
    for (const auto& s : rec.stages)
        record["stages"].push_back(
            {{"name", s.name}, {"path", s.path}, {"seconds", s.seconds}, {"skipped", s.skipped}});
    const auto record_path = out_ / "record.json";
    {
        std::ofstream f(record_path);
        f << record.dump(2) << "\n";
    }
    rec.metrics_path = metrics_path.string();
    rec.record_path = record_path.string();
    return rec;
}

ExperimentRecord Experiment::run() { return evaluate_and_record(); }

} // namespace diffinject
