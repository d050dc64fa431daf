// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "diffinject/errors.hpp"
#include "diffinject/schedule.hpp"

using namespace diffinject;

TEST_CASE("two-step constant schedule has hand-computed cumulative products") {
    const NoiseSchedule s = make_schedule(2, 0.5, 0.5);
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.snr_at(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.snr_at(2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("schedule validation") {
    CHECK_THROWS_AS(make_schedule(0, 1e-4, 0.02), ConfigError);
    CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), ConfigError);
    CHECK_THROWS_AS(make_schedule(10, 0.02, 1e-4), ConfigError); // decreasing
    CHECK_THROWS_AS(make_schedule(10, 1e-4, 1.0), ConfigError);  // beta must stay < 1
}

TEST_CASE("reference linear schedule matches brute-force recomputation") {
    const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
    long double prod = 1.0L;
    for (int t = 1; t <= 1000; ++t) {
        const long double beta = 1e-4L + (0.02L - 1e-4L) * (t - 1) / 999.0L;
        prod *= 1.0L - beta;
        CHECK(std::abs(static_cast<double>((s.alpha_cum[t - 1] - prod) / prod)) < 1e-12);
        const long double snr = prod / (1.0L - prod);
        CHECK(std::abs(static_cast<double>((s.snr[t - 1] - snr) / snr)) < 1e-10);
    }
    // lambda^P2(1) = 1/(1 + snr(1)); snr(1) = (1-1e-4)/1e-4 = 9999.
    const double l1 = p2_weight(s, {1.0, 1.0}, 1);
    CHECK(std::abs(l1 - 1.0e-4) < 1e-9);
    for (int t = 2; t <= 1000; ++t)
        CHECK(p2_weight(s, {1.0, 1.0}, t) > p2_weight(s, {1.0, 1.0}, t - 1));
}

TEST_CASE("p2 weight reduces to unweighted when gamma is zero") {
    const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
    for (int t : {1, 25, 50}) CHECK(p2_weight(s, {0.0, 1.0}, t) == 1.0);
}

TEST_CASE("q_sample matches the closed form and its statistics") {
    const NoiseSchedule s = make_schedule(10, 1e-2, 0.2);
    Tensor x0(1, 2, 2);
    x0.v = {0.5f, -0.5f, 1.f, -1.f};
    Tensor eps(1, 2, 2);
    eps.v = {1.f, 2.f, -1.f, 0.f};
    const int t = 7;
    const Tensor xt = q_sample(x0, t, eps, s);
    const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1 - s.alpha_bar(t));
    for (int i = 0; i < 4; ++i)
        CHECK(xt.v[i] == doctest::Approx(a * x0.v[i] + b * eps.v[i]).epsilon(1e-6));

    // Monte-Carlo: Var[x_t] = 1 - alpha_bar for x0 = 0.
    Rng rng(31);
    Tensor zero(1, 1, 1);
    double sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        Tensor e(1, 1, 1);
        e.v[0] = static_cast<float>(rng.normal());
        sq += static_cast<double>(q_sample(zero, t, e, s).v[0]) * q_sample(zero, t, e, s).v[0];
    }
    CHECK(sq / n == doctest::Approx(1 - s.alpha_bar(t)).epsilon(0.02));
}

TEST_CASE("schedule export re-parses to the same numbers") {
    const NoiseSchedule s = make_schedule(20, 1e-4, 0.02);
    const auto p = std::filesystem::temp_directory_path() / "diffinject-sched.csv";
    export_schedule(p, s, {1.0, 1.0});
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    CHECK(line == "t,beta,alpha_cum,snr,p2_weight");
    int t = 0;
    while (std::getline(f, line)) {
        ++t;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        CHECK(std::stoi(tok) == t);
        std::getline(ss, tok, ',');
        CHECK(std::stod(tok) == s.beta[t - 1]);
        std::getline(ss, tok, ',');
        CHECK(std::stod(tok) == s.alpha_cum[t - 1]);
        std::getline(ss, tok, ',');
        CHECK(std::stod(tok) == s.snr[t - 1]);
        std::getline(ss, tok, ',');
        CHECK(std::stod(tok) == p2_weight(s, {1.0, 1.0}, t));
    }
    CHECK(t == 20);
}
