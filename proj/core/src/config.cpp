// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diffinject/errors.hpp"

namespace diffinject {

using nlohmann::json;

RunConfig default_config() {
    RunConfig c;
    c.bias_classifier.epochs = 100;
    c.debiased_classifier.epochs = 100;
    return c;
}

void RunConfig::validate() const {
    data.spec.validate();
    bias_classifier.validate();
    debiased_classifier.validate();
    diffusion.validate();
    if (injection.gamma < 0.0 || injection.gamma > 1.0)
        throw ConfigError("injection.gamma_inject must be in [0,1], got " +
                          std::to_string(injection.gamma));
    if (injection.eta_boost < 0.0 || injection.eta_boost > 1.0)
        throw ConfigError("injection.eta_boost must be in [0,1]");
    if (injection.t_edit > diffusion.timesteps)
        throw ConfigError("injection.t_edit exceeds diffusion.timesteps");
    if (injection.t_boost > diffusion.timesteps)
        throw ConfigError("injection.t_boost exceeds diffusion.timesteps");
    if (injection.t_edit >= 0 && injection.t_boost >= 0 && injection.t_boost > injection.t_edit)
        throw ConfigError("injection.t_boost must be <= injection.t_edit");
    if (!(injection.distance_threshold >= 0.0))
        throw ConfigError("injection.distance_threshold must be >= 0");
    if (injection.calibration_images < 1)
        throw ConfigError("injection.calibration_images must be >= 1");
    if (pipeline.k < 1) throw ConfigError("pipeline.k must be >= 1");
    if (!(pipeline.bias_conflict_ratio_syn > 0.0) || pipeline.bias_conflict_ratio_syn > 1.0)
        throw ConfigError("pipeline.bias_conflict_ratio_syn must be in (0,1]");
    if (pipeline.workers < 1) throw ConfigError("pipeline.workers must be >= 1");
    if (report.grid_rows < 1) throw ConfigError("report.grid_rows must be >= 1");
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown key '" + context + key + "'");
    }
}

template <typename T>
void get_to_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

void parse_classifier(const json& j, const std::string& ctx, ClassifierConfig& c) {
    check_keys(j, {"architecture", "q", "learning_rate", "epochs", "batch_size", "hidden",
                   "augment"},
               ctx);
    if (j.contains("architecture"))
        c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    get_to_if(j, "q", c.q);
    get_to_if(j, "learning_rate", c.learning_rate);
    get_to_if(j, "epochs", c.epochs);
    get_to_if(j, "batch_size", c.batch_size);
    get_to_if(j, "hidden", c.hidden);
    get_to_if(j, "augment", c.augment);
}

} // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig c = default_config();
    // Blank config files mean "all defaults".
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return c;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError(origin + ":" + std::to_string(line) + ": parse error: " + e.what());
    }
    try {
        check_keys(j, {"seed", "out_root", "data", "bias_classifier", "debiased_classifier",
                       "diffusion", "injection", "pipeline", "report"},
                   "");
        get_to_if(j, "seed", c.seed);
        get_to_if(j, "out_root", c.out_root);
        if (j.contains("data")) {
            const auto& d = j.at("data");
            check_keys(d, {"num_classes", "image_size", "samples_per_class", "conflict_ratio",
                           "bias_kind", "path", "manifest"},
                       "data.");
            get_to_if(d, "num_classes", c.data.spec.num_classes);
            c.data.spec.num_bias_values = c.data.spec.num_classes;
            get_to_if(d, "image_size", c.data.spec.image_size);
            get_to_if(d, "samples_per_class", c.data.spec.samples_per_class);
            get_to_if(d, "conflict_ratio", c.data.spec.conflict_ratio);
            if (d.contains("bias_kind"))
                c.data.spec.bias_kind = bias_kind_from_string(d.at("bias_kind").get<std::string>());
            get_to_if(d, "path", c.data.path);
            get_to_if(d, "manifest", c.data.manifest);
        }
        if (j.contains("bias_classifier"))
            parse_classifier(j.at("bias_classifier"), "bias_classifier.", c.bias_classifier);
        if (j.contains("debiased_classifier"))
            parse_classifier(j.at("debiased_classifier"), "debiased_classifier.",
                             c.debiased_classifier);
        if (j.contains("diffusion")) {
            const auto& d = j.at("diffusion");
            check_keys(d, {"timesteps", "beta_start", "beta_end", "gamma_p2", "k_p2", "width",
                           "temb_dim", "skip_scale", "train_steps", "batch_size",
                           "learning_rate", "ema_decay"},
                       "diffusion.");
            get_to_if(d, "timesteps", c.diffusion.timesteps);
            get_to_if(d, "beta_start", c.diffusion.beta_start);
            get_to_if(d, "beta_end", c.diffusion.beta_end);
            get_to_if(d, "gamma_p2", c.diffusion.gamma_p2);
            get_to_if(d, "k_p2", c.diffusion.k_p2);
            get_to_if(d, "width", c.diffusion.width);
            get_to_if(d, "temb_dim", c.diffusion.temb_dim);
            get_to_if(d, "skip_scale", c.diffusion.skip_scale);
            get_to_if(d, "train_steps", c.diffusion.train_steps);
            get_to_if(d, "batch_size", c.diffusion.batch_size);
            get_to_if(d, "learning_rate", c.diffusion.learning_rate);
            get_to_if(d, "ema_decay", c.diffusion.ema_decay);
        }
        if (j.contains("injection")) {
            const auto& d = j.at("injection");
            check_keys(d, {"gamma_inject", "t_edit", "t_boost", "eta_boost", "mask",
                           "distance_threshold", "calibration_images"},
                       "injection.");
            get_to_if(d, "gamma_inject", c.injection.gamma);
            get_to_if(d, "t_edit", c.injection.t_edit);
            get_to_if(d, "t_boost", c.injection.t_boost);
            get_to_if(d, "eta_boost", c.injection.eta_boost);
            get_to_if(d, "mask", c.injection.mask);
            get_to_if(d, "distance_threshold", c.injection.distance_threshold);
            get_to_if(d, "calibration_images", c.injection.calibration_images);
        }
        if (j.contains("pipeline")) {
            const auto& d = j.at("pipeline");
            check_keys(d, {"k", "bias_conflict_ratio_syn", "same_class_pairing", "workers"},
                       "pipeline.");
            get_to_if(d, "k", c.pipeline.k);
            get_to_if(d, "bias_conflict_ratio_syn", c.pipeline.bias_conflict_ratio_syn);
            get_to_if(d, "same_class_pairing", c.pipeline.same_class_pairing);
            get_to_if(d, "workers", c.pipeline.workers);
        }
        if (j.contains("report")) {
            const auto& d = j.at("report");
            check_keys(d, {"grid_rows"}, "report.");
            get_to_if(d, "grid_rows", c.report.grid_rows);
        }
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string serialize_config(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["out_root"] = c.out_root;
    j["data"] = {{"num_classes", c.data.spec.num_classes},
                 {"image_size", c.data.spec.image_size},
                 {"samples_per_class", c.data.spec.samples_per_class},
                 {"conflict_ratio", c.data.spec.conflict_ratio},
                 {"bias_kind", to_string(c.data.spec.bias_kind)},
                 {"path", c.data.path},
                 {"manifest", c.data.manifest}};
    auto cls = [](const ClassifierConfig& cc) {
        return json{{"architecture", to_string(cc.architecture)},
                    {"q", cc.q},
                    {"learning_rate", cc.learning_rate},
                    {"epochs", cc.epochs},
                    {"batch_size", cc.batch_size},
                    {"hidden", cc.hidden},
                    {"augment", cc.augment}};
    };
    j["bias_classifier"] = cls(c.bias_classifier);
    j["debiased_classifier"] = cls(c.debiased_classifier);
    j["diffusion"] = {{"timesteps", c.diffusion.timesteps},
                      {"beta_start", c.diffusion.beta_start},
                      {"beta_end", c.diffusion.beta_end},
                      {"gamma_p2", c.diffusion.gamma_p2},
                      {"k_p2", c.diffusion.k_p2},
                      {"width", c.diffusion.width},
                      {"temb_dim", c.diffusion.temb_dim},
                      {"skip_scale", c.diffusion.skip_scale},
                      {"train_steps", c.diffusion.train_steps},
                      {"batch_size", c.diffusion.batch_size},
                      {"learning_rate", c.diffusion.learning_rate},
                      {"ema_decay", c.diffusion.ema_decay}};
    j["injection"] = {{"gamma_inject", c.injection.gamma},
                      {"t_edit", c.injection.t_edit},
                      {"t_boost", c.injection.t_boost},
                      {"eta_boost", c.injection.eta_boost},
                      {"mask", c.injection.mask},
                      {"distance_threshold", c.injection.distance_threshold},
                      {"calibration_images", c.injection.calibration_images}};
    j["pipeline"] = {{"k", c.pipeline.k},
                     {"bias_conflict_ratio_syn", c.pipeline.bias_conflict_ratio_syn},
                     {"same_class_pairing", c.pipeline.same_class_pairing},
                     {"workers", c.pipeline.workers}};
    j["report"] = {{"grid_rows", c.report.grid_rows}};
    return j.dump(2) + "\n";
}

} // namespace diffinject
