// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "diffinject/bias_bench.hpp"
#include "diffinject/classifiers.hpp"
#include "diffinject/errors.hpp"

using namespace diffinject;

TEST_CASE("gce loss hand-computed values") {
    // (1 - 0.5^0.5) / 0.5
    CHECK(gce_loss({0.5, 0.5}, 0, 0.5) == doctest::Approx(0.5857864376269049).epsilon(1e-12));
    // q = 1: 1 - p_y
    CHECK(gce_loss({0.5, 0.5}, 0, 1.0) == 0.5);
    CHECK(gce_loss({0.2, 0.8}, 1, 1.0) == doctest::Approx(0.2).epsilon(1e-12));
    // p_y = 0 is finite: 1/q.
    CHECK(gce_loss({0.0, 1.0}, 0, 0.5) == doctest::Approx(2.0));
    // p_y = 1 is a perfect prediction.
    CHECK(gce_loss({1.0, 0.0}, 0, 0.7) == doctest::Approx(0.0));
}

TEST_CASE("gce approaches ce as q shrinks") {
    for (double p = 0.1; p < 0.95; p += 0.1) {
        const std::vector<double> probs = {p, 1 - p};
        CHECK(std::abs(gce_loss(probs, 0, 1e-4) - ce_loss(probs, 0)) <= 1e-3);
    }
}

TEST_CASE("gce gradient factor is p_y^q") {
    CHECK(gce_gradient_factor({0.25, 0.75}, 1, 0.5) == doctest::Approx(std::pow(0.75, 0.5)));
    CHECK(gce_gradient_factor({0.25, 0.75}, 0, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("loss domain errors") {
    CHECK_THROWS_AS(gce_loss({0.5, 0.5}, 0, 0.0), DomainError);  // q out of (0,1]
    CHECK_THROWS_AS(gce_loss({0.5, 0.5}, 0, 1.5), DomainError);
    CHECK_THROWS_AS(gce_loss({0.5, 0.4}, 0, 0.5), DomainError);  // probs sum != 1
    CHECK_THROWS_AS(gce_loss({0.5, 0.5}, 2, 0.5), DomainError);  // label out of range
    CHECK_THROWS_AS(ce_loss({0.9, 0.2}, 0), DomainError);
}

namespace {
DatasetSpec tiny_spec(double rho = 0.1) {
    DatasetSpec s;
    s.num_classes = 3;
    s.num_bias_values = 3;
    s.image_size = 16;
    s.samples_per_class = 30;
    s.conflict_ratio = rho;
    s.seed = 77;
    return s;
}
} // namespace

TEST_CASE("training is deterministic and separates a toy dataset") {
    auto [train, test] = generate_dataset(tiny_spec());
    ClassifierConfig cfg;
    cfg.epochs = 12;
    cfg.seed = 5;
    TrainResult a = train_debiased_classifier(train, cfg);
    TrainResult b = train_debiased_classifier(train, cfg);
    REQUIRE(a.epochs.size() == 12);
    for (std::size_t i = 0; i < a.epochs.size(); ++i)
        CHECK(a.epochs[i].mean_loss == b.epochs[i].mean_loss);
    CHECK(a.epochs.back().mean_loss < a.epochs.front().mean_loss);
    const EvalResult train_eval = evaluate(a.model, train);
    CHECK(train_eval.overall > 0.9);
    CHECK(train_eval.has_groups);
    CHECK(train_eval.n == 90);
    CHECK(train_eval.n_aligned + train_eval.n_conflict == train_eval.n);
}

TEST_CASE("gce-trained bias classifier favors aligned samples") {
    auto [train, test] = generate_dataset(tiny_spec(0.1));
    ClassifierConfig cfg;
    cfg.epochs = 25;
    cfg.seed = 6;
    TrainResult fb = train_bias_classifier(train, cfg);
    const EvalResult e = evaluate(fb.model, train);
    CHECK(e.aligned > e.conflict); // bias shortcut dominates
}

TEST_CASE("ce ranking orders by loss with id tie-breaks") {
    auto [train, test] = generate_dataset(tiny_spec());
    ClassifierConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 7;
    TrainResult r = train_debiased_classifier(train, cfg);
    const LossRanking rank = rank_by_ce_loss(r.model, train, 10);
    REQUIRE(rank.entries.size() == 10);
    for (std::size_t i = 1; i < rank.entries.size(); ++i) {
        CHECK(rank.entries[i - 1].ce >= rank.entries[i].ce);
        if (rank.entries[i - 1].ce == rank.entries[i].ce)
            CHECK(rank.entries[i - 1].sample_id < rank.entries[i].sample_id);
    }
    CHECK_THROWS_AS(rank_by_ce_loss(r.model, train, 0), DomainError);
    CHECK_THROWS_AS(rank_by_ce_loss(r.model, train, 1000), DomainError);

    const auto p = std::filesystem::temp_directory_path() / "diffinject-rank.csv";
    save_ranking(p, rank);
    const LossRanking back = load_ranking(p);
    REQUIRE(back.entries.size() == rank.entries.size());
    for (std::size_t i = 0; i < rank.entries.size(); ++i) {
        CHECK(back.entries[i].sample_id == rank.entries[i].sample_id);
        CHECK(back.entries[i].ce == rank.entries[i].ce);
    }
}

TEST_CASE("classifier checkpoints preserve predictions") {
    auto [train, test] = generate_dataset(tiny_spec());
    for (Architecture arch : {Architecture::mlp3, Architecture::small_conv}) {
        ClassifierConfig cfg;
        cfg.architecture = arch;
        cfg.epochs = 2;
        cfg.seed = 8;
        TrainResult r = train_debiased_classifier(train, cfg);
        const auto p = std::filesystem::temp_directory_path() / "diffinject-cls.ckpt";
        save_classifier(p, r.model, cfg);
        auto [back, cfg2] = load_classifier(p);
        CHECK(cfg2.architecture == arch);
        for (int i = 0; i < 20; ++i) {
            const auto pa = r.model.predict_probs(train.samples[i].image);
            const auto pb = back.predict_probs(train.samples[i].image);
            for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k] == pb[k]);
        }
    }
}

TEST_CASE("architecture names round-trip") {
    CHECK(architecture_from_string(to_string(Architecture::mlp3)) == Architecture::mlp3);
    CHECK(architecture_from_string(to_string(Architecture::small_conv)) == Architecture::small_conv);
    CHECK_THROWS_AS(architecture_from_string("resnet50"), ConfigError);
}
