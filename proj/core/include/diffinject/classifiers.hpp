// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "diffinject/dataset.hpp"
#include "diffinject/nn.hpp"

namespace diffinject {

enum class Architecture { mlp3, small_conv };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct ClassifierConfig {
    Architecture architecture = Architecture::mlp3;
    double q = 0.7; // GCE amplification strength, in (0,1]
    double learning_rate = 0.001;
    int epochs = 100;
    int batch_size = 64;
    int hidden = 100; // mlp3 hidden width
    bool augment = false; // random crop + horizontal flip
    std::uint64_t seed = 0;

    void validate() const;
};

// Generalized cross-entropy (1 - p_y^q) / q. Interpolates to CE as q -> 0+.
// p_y == 0 yields the finite value 1/q.
double gce_loss(const std::vector<double>& probs, int y, double q);
// The scalar p_y^q relating the GCE parameter gradient to the CE gradient.
double gce_gradient_factor(const std::vector<double>& probs, int y, double q);
double ce_loss(const std::vector<double>& probs, int y);

class Classifier {
public:
    Classifier(Architecture arch, int num_classes, int image_size, int channels, int hidden,
               std::uint64_t seed);

    std::vector<double> predict_probs(const Tensor& image);
    int predict(const Tensor& image);

    // Backward from d(loss)/d(logits); gradients accumulate.
    void backward(const Vec& dlogits);
    std::vector<ParamRef> params();

    Architecture architecture() const { return arch_; }
    int num_classes() const { return num_classes_; }
    int image_size() const { return image_size_; }
    int channels() const { return channels_; }
    int hidden() const { return hidden_; }

private:
    Vec logits(const Tensor& image);

    Architecture arch_;
    int num_classes_, image_size_, channels_, hidden_;
    // mlp3
    Dense fc1_, fc2_, fc3_, fc_out_;
    ReLU r1_, r2_, r3_;
    // small_conv
    Conv3x3 conv1_, conv2_;
    ReLU cr1_, cr2_;
    Dense conv_fc_;
    int pool1_h_ = 0, pool2_h_ = 0;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
};

struct TrainResult {
    Classifier model;
    std::vector<EpochStats> epochs;
};

// Trains f_B with GCE for the configured epoch budget, no early stopping;
// overfitting to the bias shortcut is the point.
TrainResult train_bias_classifier(const Dataset& dataset, const ClassifierConfig& cfg);
// Plain cross-entropy training on D_total (or D_orig for the vanilla baseline).
TrainResult train_debiased_classifier(const Dataset& d_total, const ClassifierConfig& cfg);

struct LossRanking {
    struct Entry {
        std::int64_t sample_id;
        double ce;
    };
    std::vector<Entry> entries; // strictly descending by ce, ties by ascending id
    int K = 0;
};

LossRanking rank_by_ce_loss(Classifier& f_b, const Dataset& dataset, int K);

// Line-delimited (sample_id, ce_loss) records.
void save_ranking(const std::filesystem::path& path, const LossRanking& ranking);
LossRanking load_ranking(const std::filesystem::path& path);

struct EvalResult {
    double overall = 0.0;
    double aligned = 0.0;
    double conflict = 0.0;
    int n = 0, n_aligned = 0, n_conflict = 0;
    bool has_groups = false;
};

EvalResult evaluate(Classifier& model, const Dataset& dataset);

void save_classifier(const std::filesystem::path& path, Classifier& model,
                     const ClassifierConfig& cfg);
std::pair<Classifier, ClassifierConfig> load_classifier(const std::filesystem::path& path);

} // namespace diffinject
