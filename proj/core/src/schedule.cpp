// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/schedule.hpp"

#include <cmath>
#include <fstream>

#include "diffinject/errors.hpp"

namespace diffinject {

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > T) throw DomainError("alpha_bar: t out of range [0," + std::to_string(T) + "]");
    return t == 0 ? 1.0 : alpha_cum[t - 1];
}

double NoiseSchedule::snr_at(int t) const {
    if (t < 1 || t > T) throw DomainError("snr_at: t out of range [1," + std::to_string(T) + "]");
    return snr[t - 1];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 2) throw ConfigError("schedule needs T >= 2, got " + std::to_string(T));
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("schedule needs 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha_cum.resize(T);
    s.snr.resize(T);
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double b = beta_start + (beta_end - beta_start) * (t - 1) / (T - 1);
        s.beta[t - 1] = b;
        prod *= 1.0 - b;
        s.alpha_cum[t - 1] = prod;
        s.snr[t - 1] = prod / (1.0 - prod);
    }
    return s;
}

double p2_weight(const NoiseSchedule& schedule, const P2Config& cfg, int t) {
    if (t < 1 || t > schedule.T)
        throw DomainError("p2_weight: t out of range [1," + std::to_string(schedule.T) + "]");
    return 1.0 / std::pow(cfg.k + schedule.snr_at(t), cfg.gamma);
}

Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& schedule) {
    if (!x0.same_shape(eps)) throw DomainError("q_sample: x0/eps shape mismatch");
    const double ab = schedule.alpha_bar(t);
    const float sa = static_cast<float>(std::sqrt(ab));
    const float sb = static_cast<float>(std::sqrt(1.0 - ab));
    Tensor xt = x0;
    for (std::size_t i = 0; i < xt.size(); ++i) xt.v[i] = sa * x0.v[i] + sb * eps.v[i];
    return xt;
}

void export_schedule(const std::filesystem::path& path, const NoiseSchedule& schedule,
                     const P2Config& cfg) {
    std::ofstream f(path);
    if (!f) throw IngestError("cannot write schedule export: " + path.string());
    f << "t,beta,alpha_cum,snr,p2_weight\n";
    f.precision(17);
    for (int t = 1; t <= schedule.T; ++t)
        f << t << "," << schedule.beta[t - 1] << "," << schedule.alpha_cum[t - 1] << ","
          << schedule.snr[t - 1] << "," << p2_weight(schedule, cfg, t) << "\n";
}

} // namespace diffinject
