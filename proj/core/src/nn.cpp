// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#include "diffinject/nn.hpp"

#include <algorithm>
#include <cmath>

#include "diffinject/errors.hpp"

namespace diffinject {

namespace {
void he_init(Mat& W, Rng& rng, int fan_in) {
    const float s = std::sqrt(2.f / static_cast<float>(fan_in));
    for (Eigen::Index i = 0; i < W.rows(); ++i)
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            W(i, j) = s * static_cast<float>(rng.normal());
}
} // namespace

// ---- Dense --------------------------------------------------------------

Dense::Dense(int out, int in, Rng& rng)
    : W(out, in), dW(Mat::Zero(out, in)), b(Vec::Zero(out)), db(Vec::Zero(out)) {
    he_init(W, rng, in);
}

Vec Dense::forward(const Vec& x) {
    x_cache = x;
    return W * x + b;
}

Vec Dense::backward(const Vec& dy) {
    dW.noalias() += dy * x_cache.transpose();
    db += dy;
    return W.transpose() * dy;
}

void Dense::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".W", {static_cast<int>(W.rows()), static_cast<int>(W.cols())},
                   W.data(), dW.data(), static_cast<std::size_t>(W.size())});
    out.push_back({prefix + ".b", {static_cast<int>(b.size())}, b.data(), db.data(),
                   static_cast<std::size_t>(b.size())});
}

// ---- Conv3x3 ------------------------------------------------------------

Mat im2col3x3(const Tensor& x) {
    const int h = x.h, w = x.w;
    Mat cols(x.c * 9, h * w);
    for (int ci = 0; ci < x.c; ++ci)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                float* dst = cols.data() + static_cast<std::size_t>(ci * 9 + ky * 3 + kx) * (h * w);
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - 1;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + kx - 1;
                        dst[y * w + xx] = (sy < 0 || sy >= h || sx < 0 || sx >= w)
                                              ? 0.f
                                              : x.at(ci, sy, sx);
                    }
                }
            }
    return cols;
}

namespace {
Tensor col2im3x3(const Mat& dcols, int c, int h, int w) {
    Tensor dx(c, h, w);
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const float* src =
                    dcols.data() + static_cast<std::size_t>(ci * 9 + ky * 3 + kx) * (h * w);
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + kx - 1;
                        if (sx < 0 || sx >= w) continue;
                        dx.at(ci, sy, sx) += src[y * w + xx];
                    }
                }
            }
    return dx;
}
} // namespace

Conv3x3::Conv3x3(int cin_, int cout_, Rng& rng)
    : cin(cin_), cout(cout_), W(cout_, cin_ * 9), dW(Mat::Zero(cout_, cin_ * 9)),
      b(Vec::Zero(cout_)), db(Vec::Zero(cout_)) {
    he_init(W, rng, cin_ * 9);
}

Tensor Conv3x3::forward(const Tensor& x) {
    if (x.c != cin) throw DomainError("Conv3x3: channel mismatch");
    h = x.h;
    w = x.w;
    cols_cache = im2col3x3(x);
    Tensor out(cout, h, w);
    Eigen::Map<Mat> O(out.data(), cout, h * w);
    O.noalias() = W * cols_cache;
    O.colwise() += b;
    return out;
}

Tensor Conv3x3::backward(const Tensor& dy) {
    Eigen::Map<const Mat> D(dy.data(), cout, h * w);
    dW.noalias() += D * cols_cache.transpose();
    db += D.rowwise().sum();
    Mat dcols = W.transpose() * D;
    return col2im3x3(dcols, cin, h, w);
}

void Conv3x3::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".W", {cout, cin, 3, 3}, W.data(), dW.data(),
                   static_cast<std::size_t>(W.size())});
    out.push_back({prefix + ".b", {cout}, b.data(), db.data(), static_cast<std::size_t>(b.size())});
}

// ---- Conv1x1 ------------------------------------------------------------

Conv1x1::Conv1x1(int cin_, int cout_, Rng& rng)
    : cin(cin_), cout(cout_), W(cout_, cin_), dW(Mat::Zero(cout_, cin_)), b(Vec::Zero(cout_)),
      db(Vec::Zero(cout_)) {
    he_init(W, rng, cin_);
}

Tensor Conv1x1::forward(const Tensor& x) {
    if (x.c != cin) throw DomainError("Conv1x1: channel mismatch");
    h = x.h;
    w = x.w;
    x_cache = Eigen::Map<const Mat>(x.data(), cin, h * w);
    Tensor out(cout, h, w);
    Eigen::Map<Mat> O(out.data(), cout, h * w);
    O.noalias() = W * x_cache;
    O.colwise() += b;
    return out;
}

Tensor Conv1x1::backward(const Tensor& dy) {
    Eigen::Map<const Mat> D(dy.data(), cout, h * w);
    dW.noalias() += D * x_cache.transpose();
    db += D.rowwise().sum();
    Tensor dx(cin, h, w);
    Eigen::Map<Mat>(dx.data(), cin, h * w).noalias() = W.transpose() * D;
    return dx;
}

void Conv1x1::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".W", {cout, cin, 1, 1}, W.data(), dW.data(),
                   static_cast<std::size_t>(W.size())});
    out.push_back({prefix + ".b", {cout}, b.data(), db.data(), static_cast<std::size_t>(b.size())});
}

// ---- GroupNorm ----------------------------------------------------------

GroupNorm::GroupNorm(int channels_) : channels(channels_) {
    groups = 1;
    for (int g = std::min(8, channels); g >= 1; --g)
        if (channels % g == 0) {
            groups = g;
            break;
        }
    gamma = Vec::Ones(channels);
    dgamma = Vec::Zero(channels);
    beta = Vec::Zero(channels);
    dbeta = Vec::Zero(channels);
}

Tensor GroupNorm::forward(const Tensor& x) {
    if (x.c != channels) throw DomainError("GroupNorm: channel mismatch");
    const int cpg = channels / groups;
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    Tensor out(x.c, x.h, x.w);
    xhat_cache = Tensor(x.c, x.h, x.w);
    inv_std_.assign(groups, 0.f);
    for (int g = 0; g < groups; ++g) {
        const float* src = x.data() + static_cast<std::size_t>(g) * cpg * plane;
        const std::size_t n = static_cast<std::size_t>(cpg) * plane;
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += src[i];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (src[i] - mu) * (src[i] - mu);
        var /= static_cast<double>(n);
        const float is = static_cast<float>(1.0 / std::sqrt(var + 1e-5));
        inv_std_[g] = is;
        float* xh = xhat_cache.data() + static_cast<std::size_t>(g) * cpg * plane;
        float* dst = out.data() + static_cast<std::size_t>(g) * cpg * plane;
        for (int cc = 0; cc < cpg; ++cc) {
            const int c = g * cpg + cc;
            for (std::size_t i = cc * plane; i < (cc + 1) * plane; ++i) {
                xh[i] = static_cast<float>((src[i] - mu) * is);
                dst[i] = gamma[c] * xh[i] + beta[c];
            }
        }
    }
    return out;
}

Tensor GroupNorm::backward(const Tensor& dy) {
    const int cpg = channels / groups;
    const std::size_t plane = static_cast<std::size_t>(dy.h) * dy.w;
    Tensor dx(dy.c, dy.h, dy.w);
    for (int g = 0; g < groups; ++g) {
        const std::size_t off = static_cast<std::size_t>(g) * cpg * plane;
        const float* d = dy.data() + off;
        const float* xh = xhat_cache.data() + off;
        const std::size_t n = static_cast<std::size_t>(cpg) * plane;
        double mean_t = 0.0, mean_tx = 0.0;
        for (int cc = 0; cc < cpg; ++cc) {
            const int c = g * cpg + cc;
            double sg = 0.0, sb = 0.0;
            for (std::size_t i = cc * plane; i < (cc + 1) * plane; ++i) {
                sg += static_cast<double>(d[i]) * xh[i];
                sb += d[i];
                const double t = static_cast<double>(d[i]) * gamma[c];
                mean_t += t;
                mean_tx += t * xh[i];
            }
            dgamma[c] += static_cast<float>(sg);
            dbeta[c] += static_cast<float>(sb);
        }
        mean_t /= static_cast<double>(n);
        mean_tx /= static_cast<double>(n);
        float* out = dx.data() + off;
        for (int cc = 0; cc < cpg; ++cc) {
            const int c = g * cpg + cc;
            for (std::size_t i = cc * plane; i < (cc + 1) * plane; ++i) {
                const double t = static_cast<double>(d[i]) * gamma[c];
                out[i] = static_cast<float>(inv_std_[g] * (t - mean_t - xh[i] * mean_tx));
            }
        }
    }
    return dx;
}

void GroupNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", {channels}, gamma.data(), dgamma.data(),
                   static_cast<std::size_t>(channels)});
    out.push_back({prefix + ".beta", {channels}, beta.data(), dbeta.data(),
                   static_cast<std::size_t>(channels)});
}

// ---- activations --------------------------------------------------------

namespace {
inline float sigmoidf(float x) { return 1.f / (1.f + std::exp(-x)); }
} // namespace

Tensor SiLU::forward(const Tensor& x) {
    x_cache = x;
    Tensor y = x;
    for (float& v : y.v) v *= sigmoidf(v);
    return y;
}

Tensor SiLU::backward(const Tensor& dy) const {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        const float s = sigmoidf(x_cache.v[i]);
        dx.v[i] *= s * (1.f + x_cache.v[i] * (1.f - s));
    }
    return dx;
}

Vec SiLU::forward(const Vec& x) {
    x_vec_cache = x;
    Vec y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] *= sigmoidf(y[i]);
    return y;
}

Vec SiLU::backward(const Vec& dy) const {
    Vec dx = dy;
    for (Eigen::Index i = 0; i < dx.size(); ++i) {
        const float s = sigmoidf(x_vec_cache[i]);
        dx[i] *= s * (1.f + x_vec_cache[i] * (1.f - s));
    }
    return dx;
}

Vec ReLU::forward(const Vec& x) {
    x_vec_cache = x;
    return x.cwiseMax(0.f);
}

Vec ReLU::backward(const Vec& dy) const {
    Vec dx = dy;
    for (Eigen::Index i = 0; i < dx.size(); ++i)
        if (x_vec_cache[i] <= 0.f) dx[i] = 0.f;
    return dx;
}

Tensor ReLU::forward(const Tensor& x) {
    x_cache = x;
    Tensor y = x;
    for (float& v : y.v) v = std::max(v, 0.f);
    return y;
}

Tensor ReLU::backward(const Tensor& dy) const {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (x_cache.v[i] <= 0.f) dx.v[i] = 0.f;
    return dx;
}

// ---- structural ops -----------------------------------------------------

Tensor avg_pool2(const Tensor& x) {
    Tensor y(x.c, x.h / 2, x.w / 2);
    for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
            for (int xx = 0; xx < y.w; ++xx)
                y.at(c, yy, xx) = 0.25f * (x.at(c, 2 * yy, 2 * xx) + x.at(c, 2 * yy, 2 * xx + 1) +
                                           x.at(c, 2 * yy + 1, 2 * xx) +
                                           x.at(c, 2 * yy + 1, 2 * xx + 1));
    return y;
}

Tensor avg_pool2_backward(const Tensor& dy, int in_h, int in_w) {
    Tensor dx(dy.c, in_h, in_w);
    for (int c = 0; c < dy.c; ++c)
        for (int yy = 0; yy < dy.h; ++yy)
            for (int xx = 0; xx < dy.w; ++xx) {
                const float g = 0.25f * dy.at(c, yy, xx);
                dx.at(c, 2 * yy, 2 * xx) = g;
                dx.at(c, 2 * yy, 2 * xx + 1) = g;
                dx.at(c, 2 * yy + 1, 2 * xx) = g;
                dx.at(c, 2 * yy + 1, 2 * xx + 1) = g;
            }
    return dx;
}

Tensor upsample2(const Tensor& x) {
    Tensor y(x.c, x.h * 2, x.w * 2);
    for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
            for (int xx = 0; xx < y.w; ++xx) y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
    return y;
}

Tensor upsample2_backward(const Tensor& dy) {
    Tensor dx(dy.c, dy.h / 2, dy.w / 2);
    for (int c = 0; c < dy.c; ++c)
        for (int yy = 0; yy < dy.h; ++yy)
            for (int xx = 0; xx < dy.w; ++xx) dx.at(c, yy / 2, xx / 2) += dy.at(c, yy, xx);
    return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    Tensor y(a.c + b.c, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), y.v.begin());
    std::copy(b.v.begin(), b.v.end(), y.v.begin() + static_cast<long>(a.size()));
    return y;
}

void split_channels(const Tensor& d, int ca, Tensor& da, Tensor& db) {
    da = Tensor(ca, d.h, d.w);
    db = Tensor(d.c - ca, d.h, d.w);
    std::copy(d.v.begin(), d.v.begin() + static_cast<long>(da.size()), da.v.begin());
    std::copy(d.v.begin() + static_cast<long>(da.size()), d.v.end(), db.v.begin());
}

Vec time_embedding(int t, int dim) {
    Vec e(dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double f = std::exp(-std::log(10000.0) * i / std::max(half - 1, 1));
        e[i] = static_cast<float>(std::sin(t * f));
        e[half + i] = static_cast<float>(std::cos(t * f));
    }
    return e;
}

// ---- Adam ---------------------------------------------------------------

void zero_grads(const std::vector<ParamRef>& params) {
    for (const auto& p : params) std::fill(p.grad, p.grad + p.n, 0.f);
}

void Adam::step(const std::vector<ParamRef>& params, double grad_scale) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].n, 0.f);
            v_[i].assign(params[i].n, 0.f);
        }
    }
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, step_count);
    const double bc2 = 1.0 - std::pow(beta2, step_count);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        for (std::size_t j = 0; j < p.n; ++j) {
            const double g = p.grad[j] * grad_scale;
            m_[i][j] = static_cast<float>(beta1 * m_[i][j] + (1.0 - beta1) * g);
            v_[i][j] = static_cast<float>(beta2 * v_[i][j] + (1.0 - beta2) * g * g);
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            p.data[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

// ---- checkpoint helpers -------------------------------------------------

void params_to_checkpoint(const std::vector<ParamRef>& params, Checkpoint& ckpt) {
    for (const auto& p : params) {
        ArrayRecord a;
        a.name = p.name;
        a.shape = p.shape;
        a.data.assign(p.data, p.data + p.n);
        ckpt.arrays.push_back(std::move(a));
    }
}

void params_from_checkpoint(const std::vector<ParamRef>& params, const Checkpoint& ckpt) {
    for (const auto& p : params) {
        const auto& a = ckpt.array(p.name);
        if (a.data.size() != p.n)
            throw IngestError("checkpoint array '" + p.name + "' has wrong size");
        std::copy(a.data.begin(), a.data.end(), p.data);
    }
}

} // namespace diffinject
