// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "diffinject/rng.hpp"
#include "diffinject/tensor.hpp"

namespace diffinject {

// Linear-beta noise schedule. All arrays are indexed by timestep t in [1, T];
// alpha_cum(t) is the cumulative product of (1 - beta_s) up to t, and
// snr(t) = alpha_cum(t) / (1 - alpha_cum(t)). alpha_cum(0) == 1 by convention.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;      // size T, beta[t-1] = beta_t
    std::vector<double> alpha_cum; // size T
    std::vector<double> snr;       // size T

    double alpha_bar(int t) const; // t in [0, T], alpha_bar(0) = 1
    double snr_at(int t) const;    // t in [1, T]
};

struct P2Config {
    double gamma = 1.0; // sharpness exponent
    double k = 1.0;     // softening constant
};

NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

// P2 weight lambda_t / (k + SNR(t))^gamma with the baseline lambda_t = 1.
double p2_weight(const NoiseSchedule& schedule, const P2Config& cfg, int t);

// Forward process: x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& schedule);

// Line-delimited audit export: t,beta,alpha_cum,snr,p2_weight (header line).
void export_schedule(const std::filesystem::path& path, const NoiseSchedule& schedule,
                     const P2Config& cfg);

} // namespace diffinject
