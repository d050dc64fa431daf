// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "diffinject/checkpoint.hpp"
#include "diffinject/errors.hpp"

namespace diffinject {

std::string to_string(Architecture a) { return a == Architecture::mlp3 ? "mlp3" : "small_conv"; }

Architecture architecture_from_string(const std::string& s) {
    if (s == "mlp3") return Architecture::mlp3;
    if (s == "small_conv") return Architecture::small_conv;
    throw ConfigError("unknown architecture '" + s + "' (expected mlp3|small_conv)");
}

void ClassifierConfig::validate() const {
    if (!(q > 0.0) || q > 1.0) throw ConfigError("classifier q must be in (0,1]");
    if (!(learning_rate > 0.0)) throw ConfigError("classifier learning_rate must be > 0");
    if (epochs < 0) throw ConfigError("classifier epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("classifier batch_size must be >= 1");
    if (hidden < 1) throw ConfigError("classifier hidden must be >= 1");
}

// ---- losses -------------------------------------------------------------

namespace {
void check_probs(const std::vector<double>& probs, int y) {
    if (y < 0 || y >= static_cast<int>(probs.size()))
        throw DomainError("class index out of range");
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0 || p > 1.0) throw DomainError("probability outside [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw DomainError("probabilities do not sum to 1");
}
} // namespace

double gce_loss(const std::vector<double>& probs, int y, double q) {
    if (!(q > 0.0) || q > 1.0) throw DomainError("q must be in (0,1]");
    check_probs(probs, y);
    return (1.0 - std::pow(probs[y], q)) / q;
}

double gce_gradient_factor(const std::vector<double>& probs, int y, double q) {
    if (!(q > 0.0) || q > 1.0) throw DomainError("q must be in (0,1]");
    check_probs(probs, y);
    return std::pow(probs[y], q);
}

double ce_loss(const std::vector<double>& probs, int y) {
    check_probs(probs, y);
    // Clamp keeps p_y == 0 finite; mirrors the GCE convention of returning
    // a large but usable loss instead of throwing.
    return -std::log(std::max(probs[y], 1e-300));
}

// ---- model --------------------------------------------------------------

Classifier::Classifier(Architecture arch, int num_classes, int image_size, int channels,
                       int hidden, std::uint64_t seed)
    : arch_(arch), num_classes_(num_classes), image_size_(image_size), channels_(channels),
      hidden_(hidden) {
    Rng rng(Rng::stream_seed(seed, "classifier-init"));
    if (arch == Architecture::mlp3) {
        const int in = channels * image_size * image_size;
        fc1_ = Dense(hidden, in, rng);
        fc2_ = Dense(hidden, hidden, rng);
        fc3_ = Dense(hidden, hidden, rng);
        fc_out_ = Dense(num_classes, hidden, rng);
    } else {
        conv1_ = Conv3x3(channels, 8, rng);
        conv2_ = Conv3x3(8, 16, rng);
        const int s4 = image_size / 4;
        conv_fc_ = Dense(num_classes, 16 * s4 * s4, rng);
    }
}

Vec Classifier::logits(const Tensor& image) {
    if (arch_ == Architecture::mlp3) {
        Vec x = Eigen::Map<const Vec>(image.data(), static_cast<Eigen::Index>(image.size()));
        x = r1_.forward(fc1_.forward(x));
        x = r2_.forward(fc2_.forward(x));
        x = r3_.forward(fc3_.forward(x));
        return fc_out_.forward(x);
    }
    Tensor a = cr1_.forward(conv1_.forward(image));
    pool1_h_ = a.h;
    Tensor p1 = avg_pool2(a);
    Tensor b = cr2_.forward(conv2_.forward(p1));
    pool2_h_ = b.h;
    Tensor p2 = avg_pool2(b);
    Vec flat = Eigen::Map<const Vec>(p2.data(), static_cast<Eigen::Index>(p2.size()));
    return conv_fc_.forward(flat);
}

void Classifier::backward(const Vec& dlogits) {
    if (arch_ == Architecture::mlp3) {
        Vec d = fc_out_.backward(dlogits);
        d = fc1_.backward(r1_.backward(fc2_.backward(r2_.backward(fc3_.backward(r3_.backward(d))))));
        return;
    }
    Vec dflat = conv_fc_.backward(dlogits);
    const int s4 = image_size_ / 4;
    Tensor dp2(16, s4, s4);
    std::copy(dflat.data(), dflat.data() + dflat.size(), dp2.data());
    Tensor db = avg_pool2_backward(dp2, pool2_h_, pool2_h_);
    Tensor dp1 = conv2_.backward(cr2_.backward(db));
    Tensor da = avg_pool2_backward(dp1, pool1_h_, pool1_h_);
    conv1_.backward(cr1_.backward(da));
}

std::vector<double> Classifier::predict_probs(const Tensor& image) {
    const Vec z = logits(image);
    double zmax = z[0];
    for (Eigen::Index i = 1; i < z.size(); ++i) zmax = std::max(zmax, static_cast<double>(z[i]));
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        p[i] = std::exp(static_cast<double>(z[i]) - zmax);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

int Classifier::predict(const Tensor& image) {
    const auto p = predict_probs(image);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<ParamRef> Classifier::params() {
    std::vector<ParamRef> out;
    if (arch_ == Architecture::mlp3) {
        fc1_.collect("fc1", out);
        fc2_.collect("fc2", out);
        fc3_.collect("fc3", out);
        fc_out_.collect("fc_out", out);
    } else {
        conv1_.collect("conv1", out);
        conv2_.collect("conv2", out);
        conv_fc_.collect("conv_fc", out);
    }
    return out;
}

// ---- training -----------------------------------------------------------

namespace {

enum class LossKind { gce, ce };

Tensor augment_sample(const Tensor& img, Rng& rng) {
    Tensor out = img;
    if (rng.uniform() < 0.5) { // horizontal flip
        for (int c = 0; c < out.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w / 2; ++x)
                    std::swap(out.at(c, y, x), out.at(c, y, out.w - 1 - x));
    }
    // random crop via +-2px shift with zero padding
    const int dx = static_cast<int>(rng.uniform_int(-2, 2));
    const int dy = static_cast<int>(rng.uniform_int(-2, 2));
    if (dx != 0 || dy != 0) {
        Tensor shifted(out.c, out.h, out.w);
        for (int c = 0; c < out.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x) {
                    const int sy = y + dy, sx = x + dx;
                    if (sy >= 0 && sy < out.h && sx >= 0 && sx < out.w)
                        shifted.at(c, y, x) = out.at(c, sy, sx);
                }
        out = std::move(shifted);
    }
    return out;
}

TrainResult train_impl(const Dataset& dataset, const ClassifierConfig& cfg, LossKind kind) {
    cfg.validate();
    if (dataset.samples.empty()) throw TrainingError("empty training dataset");
    const auto& first = dataset.samples.front().image;
    int num_classes = 0;
    for (const auto& s : dataset.samples) num_classes = std::max(num_classes, s.class_label + 1);
    num_classes = std::max(num_classes, 2);

    TrainResult result{Classifier(cfg.architecture, num_classes, first.h, first.c, cfg.hidden,
                                  cfg.seed),
                       {}};
    auto params = result.model.params();
    Adam opt;
    opt.lr = cfg.learning_rate;
    Rng shuffle_rng(Rng::stream_seed(cfg.seed, "classifier-shuffle"));
    Rng aug_rng(Rng::stream_seed(cfg.seed, "classifier-augment"));

    const int n = static_cast<int>(dataset.samples.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
        double loss_sum = 0.0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int end = std::min(start + cfg.batch_size, n);
            zero_grads(params);
            for (int i = start; i < end; ++i) {
                const Sample& s = dataset.samples[order[i]];
                const Tensor img = cfg.augment ? augment_sample(s.image, aug_rng) : s.image;
                const auto probs = result.model.predict_probs(img);
                double factor = 1.0;
                if (kind == LossKind::gce) {
                    loss_sum += gce_loss(probs, s.class_label, cfg.q);
                    factor = gce_gradient_factor(probs, s.class_label, cfg.q);
                } else {
                    loss_sum += ce_loss(probs, s.class_label);
                }
                Vec dlogits(num_classes);
                for (int c = 0; c < num_classes; ++c)
                    dlogits[c] = static_cast<float>(
                        factor * (probs[c] - (c == s.class_label ? 1.0 : 0.0)));
                result.model.backward(dlogits);
            }
            opt.step(params, 1.0 / (end - start));
        }
        const double mean_loss = loss_sum / n;
        if (!std::isfinite(mean_loss))
            throw TrainingError("classifier training diverged at epoch " + std::to_string(epoch));
        result.epochs.push_back({epoch, mean_loss});
    }
    return result;
}

} // namespace

TrainResult train_bias_classifier(const Dataset& dataset, const ClassifierConfig& cfg) {
    return train_impl(dataset, cfg, LossKind::gce);
}

TrainResult train_debiased_classifier(const Dataset& d_total, const ClassifierConfig& cfg) {
    return train_impl(d_total, cfg, LossKind::ce);
}

// ---- ranking ------------------------------------------------------------

LossRanking rank_by_ce_loss(Classifier& f_b, const Dataset& dataset, int K) {
    const int n = static_cast<int>(dataset.samples.size());
    if (K < 1 || K > n) throw DomainError("K must be in [1, |dataset|], got " + std::to_string(K));
    std::vector<LossRanking::Entry> all;
    all.reserve(n);
    for (const auto& s : dataset.samples)
        all.push_back({s.sample_id, ce_loss(f_b.predict_probs(s.image), s.class_label)});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.ce != b.ce) return a.ce > b.ce;
        return a.sample_id < b.sample_id;
    });
    LossRanking r;
    r.K = K;
    r.entries.assign(all.begin(), all.begin() + K);
    return r;
}

void save_ranking(const std::filesystem::path& path, const LossRanking& ranking) {
    std::ofstream f(path);
    if (!f) throw IngestError("cannot write ranking: " + path.string());
    f << "sample_id,ce_loss\n";
    f.precision(17);
    for (const auto& e : ranking.entries) f << e.sample_id << "," << e.ce << "\n";
}

LossRanking load_ranking(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open ranking: " + path.string());
    std::string line;
    std::getline(f, line);
    if (line != "sample_id,ce_loss") throw ManifestError("bad ranking header in " + path.string());
    LossRanking r;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id, ce;
        std::getline(ss, id, ',');
        std::getline(ss, ce);
        r.entries.push_back({std::stoll(id), std::stod(ce)});
    }
    r.K = static_cast<int>(r.entries.size());
    return r;
}

// ---- evaluation ---------------------------------------------------------

EvalResult evaluate(Classifier& model, const Dataset& dataset) {
    if (dataset.samples.empty()) throw DomainError("evaluate: empty dataset");
    EvalResult r;
    r.has_groups = true;
    int correct = 0, correct_aligned = 0, correct_conflict = 0;
    for (const auto& s : dataset.samples) {
        if (s.bias_label < 0) r.has_groups = false;
        const bool ok = model.predict(s.image) == s.class_label;
        correct += ok;
        ++r.n;
        if (s.bias_label >= 0) {
            if (s.is_conflict) {
                ++r.n_conflict;
                correct_conflict += ok;
            } else {
                ++r.n_aligned;
                correct_aligned += ok;
            }
        }
    }
    r.overall = static_cast<double>(correct) / r.n;
    if (r.has_groups) {
        r.aligned = r.n_aligned ? static_cast<double>(correct_aligned) / r.n_aligned : 0.0;
        r.conflict = r.n_conflict ? static_cast<double>(correct_conflict) / r.n_conflict : 0.0;
    }
    return r;
}

// ---- checkpointing ------------------------------------------------------

void save_classifier(const std::filesystem::path& path, Classifier& model,
                     const ClassifierConfig& cfg) {
    Checkpoint ckpt;
    nlohmann::json meta;
    meta["kind"] = "classifier";
    meta["seed"] = cfg.seed;
    meta["config"] = {{"architecture", to_string(model.architecture())},
                      {"q", cfg.q},
                      {"learning_rate", cfg.learning_rate},
                      {"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"hidden", model.hidden()},
                      {"augment", cfg.augment},
                      {"num_classes", model.num_classes()},
                      {"image_size", model.image_size()},
                      {"channels", model.channels()}};
    ckpt.meta_json = meta.dump();
    params_to_checkpoint(model.params(), ckpt);
    save_checkpoint(path, ckpt);
}

std::pair<Classifier, ClassifierConfig> load_classifier(const std::filesystem::path& path) {
    const Checkpoint ckpt = load_checkpoint(path);
    const auto meta = nlohmann::json::parse(ckpt.meta_json);
    if (meta.value("kind", "") != "classifier")
        throw IngestError("not a classifier checkpoint: " + path.string());
    const auto& c = meta.at("config");
    ClassifierConfig cfg;
    cfg.architecture = architecture_from_string(c.at("architecture"));
    cfg.q = c.at("q");
    cfg.learning_rate = c.at("learning_rate");
    cfg.epochs = c.at("epochs");
    cfg.batch_size = c.at("batch_size");
    cfg.hidden = c.at("hidden");
    cfg.augment = c.at("augment");
    cfg.seed = meta.at("seed");
    Classifier model(cfg.architecture, c.at("num_classes"), c.at("image_size"), c.at("channels"),
                     cfg.hidden, cfg.seed);
    params_from_checkpoint(model.params(), ckpt);
    return {std::move(model), cfg};
}

} // namespace diffinject
