// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/injector.hpp"

#include <algorithm>
#include <cmath>

#include "diffinject/errors.hpp"

namespace diffinject {

void InjectionConfig::validate(int T, const std::array<int, 3>& bottleneck) const {
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma_inject must be in [0,1]");
    if (eta_boost < 0.0 || eta_boost > 1.0) throw ConfigError("eta_boost must be in [0,1]");
    if (!(T >= t_edit && t_edit >= t_boost && t_boost >= 0))
        throw ConfigError("injection windows must satisfy T >= t_edit >= t_boost >= 0 (T=" +
                          std::to_string(T) + ", t_edit=" + std::to_string(t_edit) +
                          ", t_boost=" + std::to_string(t_boost) + ")");
    if (mask && (mask->h != bottleneck[1] || mask->w != bottleneck[2] || mask->c != 1))
        throw ConfigError("mask shape does not match bottleneck spatial grid");
}

std::vector<float> slerp(const std::vector<float>& a, const std::vector<float>& b, double gamma) {
    if (a.size() != b.size()) throw DomainError("slerp: size mismatch");
    if (gamma < 0.0 || gamma > 1.0) throw DomainError("slerp: gamma must be in [0,1]");
    double na = 0.0, nb = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
        ab += static_cast<double>(a[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DomainError("slerp: zero-norm input");
    if (gamma == 0.0) return a;
    if (gamma == 1.0) return b;
    const double omega = std::acos(std::clamp(ab / std::sqrt(na * nb), -1.0, 1.0));
    std::vector<float> out(a.size());
    if (omega < 1e-6) { // near-parallel: lerp
        for (std::size_t i = 0; i < a.size(); ++i)
            out[i] = static_cast<float>((1.0 - gamma) * a[i] + gamma * b[i]);
        return out;
    }
    const double s = std::sin(omega);
    const double wa = std::sin((1.0 - gamma) * omega) / s;
    const double wb = std::sin(gamma * omega) / s;
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = static_cast<float>(wa * a[i] + wb * b[i]);
    return out;
}

Tensor inject_h(const Tensor& h_orig, const Tensor& h_content, double gamma, const Tensor* mask) {
    if (!h_orig.same_shape(h_content)) throw DomainError("inject_h: shape mismatch");
    if (gamma < 0.0 || gamma > 1.0) throw DomainError("inject_h: gamma must be in [0,1]");
    if (mask && (mask->h != h_orig.h || mask->w != h_orig.w))
        throw DomainError("inject_h: mask does not match bottleneck spatial grid");
    if (gamma == 0.0) return h_orig;

    // Masked region flattened across all channels; no mask means everything.
    std::vector<std::size_t> idx;
    if (mask) {
        for (int y = 0; y < h_orig.h; ++y)
            for (int x = 0; x < h_orig.w; ++x)
                if (mask->at(0, y, x) > 0.5f)
                    for (int c = 0; c < h_orig.c; ++c)
                        idx.push_back((static_cast<std::size_t>(c) * h_orig.h + y) * h_orig.w + x);
    } else {
        idx.resize(h_orig.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    }
    if (idx.empty()) return h_orig;

    std::vector<float> o(idx.size()), c(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        o[i] = h_orig.v[idx[i]];
        c[i] = h_content.v[idx[i]];
    }
    double no = 0.0, nc = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        no += static_cast<double>(o[i]) * o[i];
        nc += static_cast<double>(c[i]) * c[i];
    }
    if (no == 0.0 || nc == 0.0) throw DomainError("inject_h: zero-norm bottleneck region");
    const double rescale = std::sqrt(no / nc);
    for (float& x : c) x = static_cast<float>(x * rescale);
    const std::vector<float> mixed = slerp(o, c, gamma);

    Tensor out = h_orig;
    for (std::size_t i = 0; i < idx.size(); ++i) out.v[idx[i]] = mixed[i];
    return out;
}

namespace {
Tensord predict_x0(const Tensord& x_t, const Tensor& eps, double alpha_bar) {
    const double sa = std::sqrt(alpha_bar);
    const double sb = std::sqrt(1.0 - alpha_bar);
    Tensord p = x_t;
    for (std::size_t i = 0; i < p.size(); ++i) p.v[i] = (x_t.v[i] - sb * eps.v[i]) / sa;
    return p;
}
} // namespace

LatentTrajectory ddim_invert(const Tensor& x0, BottleneckModel& model,
                             const NoiseSchedule& schedule) {
    LatentTrajectory traj;
    traj.h.reserve(schedule.T);
    traj.pred_x0.reserve(schedule.T);
    Tensord x = widen(x0);
    for (int s = 0; s < schedule.T; ++s) {
        // Step s -> s+1 evaluates the model at timestep s+1.
        const Tensor eps = model.forward(narrow(x), s + 1);
        traj.h.push_back(model.recorded_h());
        const double ab_s = schedule.alpha_bar(s);
        const double ab_next = schedule.alpha_bar(s + 1);
        const Tensord p = predict_x0(x, eps, ab_s);
        traj.pred_x0.push_back(p);
        const double ca = std::sqrt(ab_next);
        const double cb = std::sqrt(1.0 - ab_next);
        for (std::size_t i = 0; i < x.size(); ++i) x.v[i] = ca * p.v[i] + cb * eps.v[i];
        if (!all_finite(x))
            throw NumericalError("ddim_invert: non-finite latent at step " + std::to_string(s + 1));
    }
    traj.x_T = std::move(x);
    return traj;
}

Tensord ddim_reverse(const Tensord& x_T, BottleneckModel& model, const NoiseSchedule& schedule,
                     LatentTrajectory* record) {
    Tensord x = x_T;
    if (record) {
        record->x_T = x_T;
        record->h.assign(schedule.T, Tensor());
    }
    for (int t = schedule.T; t >= 1; --t) {
        const Tensor eps = model.forward(narrow(x), t);
        if (record) record->h[t - 1] = model.recorded_h();
        const double ab_t = schedule.alpha_bar(t);
        const double ab_prev = schedule.alpha_bar(t - 1);
        const Tensord p = predict_x0(x, eps, ab_t);
        const double ca = std::sqrt(ab_prev);
        const double cb = std::sqrt(1.0 - ab_prev);
        for (std::size_t i = 0; i < x.size(); ++i) x.v[i] = ca * p.v[i] + cb * eps.v[i];
        if (!all_finite(x))
            throw NumericalError("ddim_reverse: non-finite latent at step " + std::to_string(t));
    }
    return x;
}

Tensor reverse_with_injection(const Tensord& x_T, const LatentTrajectory& content,
                              BottleneckModel& model, const NoiseSchedule& schedule,
                              const InjectionConfig& cfg, Rng* boost_rng) {
    cfg.validate(schedule.T, model.bottleneck_shape());
    if (static_cast<int>(content.h.size()) != schedule.T)
        throw ConfigError("content trajectory length does not match schedule");
    const Tensor* mask = cfg.mask ? &*cfg.mask : nullptr;
    Tensord x = x_T;
    for (int t = schedule.T; t >= 1; --t) {
        const Tensor xf = narrow(x);
        const Tensor eps_plain = model.forward(xf, t);
        Tensor eps_used = eps_plain;
        if (t >= cfg.t_edit && cfg.gamma > 0.0) {
            const Tensor h_tilde =
                inject_h(model.recorded_h(), content.h[t - 1], cfg.gamma, mask);
            model.set_h_override(h_tilde);
            eps_used = model.forward(xf, t);
            model.set_h_override(std::nullopt);
        }
        const double ab_t = schedule.alpha_bar(t);
        const double ab_prev = schedule.alpha_bar(t - 1);
        double sigma = 0.0;
        if (t <= cfg.t_boost && cfg.eta_boost > 0.0)
            sigma = cfg.eta_boost * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) *
                    std::sqrt(1.0 - ab_t / ab_prev);
        const Tensord p = predict_x0(x, eps_used, ab_t);
        const double ca = std::sqrt(ab_prev);
        const double cb = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
        for (std::size_t i = 0; i < x.size(); ++i) {
            double z = 0.0;
            if (sigma > 0.0) {
                if (!boost_rng)
                    throw ConfigError("stochastic boost window requires an rng");
                z = boost_rng->normal();
            }
            x.v[i] = ca * p.v[i] + cb * eps_plain.v[i] + sigma * z;
        }
        if (!all_finite(x))
            throw NumericalError("reverse_with_injection: non-finite latent at step " +
                                 std::to_string(t));
    }
    return to_image_range(x);
}

double patch_stats_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DomainError("patch_stats_distance: shape mismatch");
    const int patch = 8;
    double acc = 0.0;
    int n_stats = 0;
    for (int c = 0; c < a.c; ++c)
        for (int py = 0; py < a.h; py += patch)
            for (int px = 0; px < a.w; px += patch) {
                const int yh = std::min(py + patch, a.h), xw = std::min(px + patch, a.w);
                double ma = 0, mb = 0, va = 0, vb = 0;
                const int cnt = (yh - py) * (xw - px);
                for (int y = py; y < yh; ++y)
                    for (int x = px; x < xw; ++x) {
                        ma += a.at(c, y, x);
                        mb += b.at(c, y, x);
                    }
                ma /= cnt;
                mb /= cnt;
                for (int y = py; y < yh; ++y)
                    for (int x = px; x < xw; ++x) {
                        va += (a.at(c, y, x) - ma) * (a.at(c, y, x) - ma);
                        vb += (b.at(c, y, x) - mb) * (b.at(c, y, x) - mb);
                    }
                va /= cnt;
                vb /= cnt;
                acc += (ma - mb) * (ma - mb) + (va - vb) * (va - vb);
                n_stats += 2;
            }
    // Scaled so reconstruction-drift profiles span roughly [0, 1] at 32x32;
    // keeps the conventional 0.33 edit threshold meaningful for this metric.
    return std::sqrt(acc / n_stats) * 40.0;
}

int pick_t_edit(const std::vector<double>& mean_dist, double threshold) {
    double max_seen = 0.0;
    for (std::size_t i = 0; i < mean_dist.size(); ++i) {
        if (mean_dist[i] >= threshold) return static_cast<int>(i) + 1;
        max_seen = std::max(max_seen, mean_dist[i]);
    }
    throw CalibrationError("t_edit threshold " + std::to_string(threshold) +
                           " never reached; max observed distance " + std::to_string(max_seen));
}

int compute_t_edit(BottleneckModel& model, const NoiseSchedule& schedule,
                   const std::vector<Tensor>& calibration_images, const DistanceFn& distance_fn,
                   double threshold) {
    if (calibration_images.empty()) throw DomainError("compute_t_edit: empty calibration set");
    std::vector<double> profile(schedule.T, 0.0);
    for (const auto& img01 : calibration_images) {
        const LatentTrajectory traj = ddim_invert(to_model_range(img01), model, schedule);
        for (int t = 1; t <= schedule.T; ++t)
            profile[t - 1] += distance_fn(img01, to_image_range(traj.pred_x0[t - 1]));
    }
    for (double& d : profile) d /= static_cast<double>(calibration_images.size());
    // Per-step drift is noisy at small T; smooth with a centered moving
    // average so a single spike cannot trigger the threshold early.
    const int win = 4;
    std::vector<double> smooth(profile.size());
    for (int t = 0; t < static_cast<int>(profile.size()); ++t) {
        double acc = 0.0;
        int cnt = 0;
        for (int k = t - win; k <= t + win; ++k)
            if (k >= 0 && k < static_cast<int>(profile.size())) {
                acc += profile[k];
                ++cnt;
            }
        smooth[t] = acc / cnt;
    }
    return pick_t_edit(smooth, threshold);
}

Tensor foreground_mask(const Tensor& image01, int grid_h, int grid_w) {
    Tensor mask(1, grid_h, grid_w);
    const int fy = image01.h / grid_h, fx = image01.w / grid_w;
    // Bright-over-background threshold on max-pooled luminance.
    for (int gy = 0; gy < grid_h; ++gy)
        for (int gx = 0; gx < grid_w; ++gx) {
            float peak = 0.f;
            for (int y = gy * fy; y < (gy + 1) * fy; ++y)
                for (int x = gx * fx; x < (gx + 1) * fx; ++x) {
                    float lum = 0.f;
                    for (int c = 0; c < image01.c; ++c) lum += image01.at(c, y, x);
                    peak = std::max(peak, lum / image01.c);
                }
            mask.at(0, gy, gx) = peak > 0.35f ? 1.f : 0.f;
        }
    return mask;
}

} // namespace diffinject
