// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/losses.hpp"

#include "vgd/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace vgd {

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    const int half = kSsimWindow / 2;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (double& v : w) {
        v /= sum;
    }
    return w;
}

// Single-channel plane, row-major.
struct Plane {
    int w = 0;
    int h = 0;
    std::vector<double> v;
    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane extract(const Image& img, int c, double (*fn)(double, double), const Image* other = nullptr) {
    Plane p{img.width(), img.height(), std::vector<double>(img.width() * img.height())};
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double a = img.at(y, x, c);
            const double b = other ? other->at(y, x, c) : a;
            p.at(y, x) = fn(a, b);
        }
    }
    return p;
}

// "valid" separable filtering with the Gaussian window.
Plane filter_valid(const Plane& in, const std::array<double, kSsimWindow>& k) {
    const int ow = in.w - kSsimWindow + 1;
    const int oh = in.h - kSsimWindow + 1;
    Plane tmp{ow, in.h, std::vector<double>(static_cast<std::size_t>(ow) * in.h)};
    for (int y = 0; y < in.h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) {
                s += k[i] * in.at(y, x + i);
            }
            tmp.at(y, x) = s;
        }
    }
    Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) {
                s += k[i] * tmp.at(y + i, x);
            }
            out.at(y, x) = s;
        }
    }
    return out;
}

// Adjoint of filter_valid: spreads a valid-size map back to the full image size.
Plane filter_adjoint(const Plane& g, int full_w, int full_h,
                     const std::array<double, kSsimWindow>& k) {
    Plane tmp{g.w, full_h, std::vector<double>(static_cast<std::size_t>(g.w) * full_h, 0.0)};
    for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
            const double v = g.at(y, x);
            for (int i = 0; i < kSsimWindow; ++i) {
                tmp.at(y + i, x) += k[i] * v;
            }
        }
    }
    Plane out{full_w, full_h, std::vector<double>(static_cast<std::size_t>(full_w) * full_h, 0.0)};
    for (int y = 0; y < full_h; ++y) {
        for (int x = 0; x < g.w; ++x) {
            const double v = tmp.at(y, x);
            for (int i = 0; i < kSsimWindow; ++i) {
                out.at(y, x + i) += k[i] * v;
            }
        }
    }
    return out;
}

double first(double a, double) { return a; }
double second(double, double b) { return b; }
double square_first(double a, double) { return a * a; }
double square_second(double, double b) { return b * b; }
double product(double a, double b) { return a * b; }

ValueAndGrad ssim_impl(const Image& a, const Image& b, bool want_grad) {
    require_same_shape(a, b, "ssim");
    if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
        throw ValidationError("ssim: image smaller than the 11x11 window");
    }
    const auto k = gaussian_window();
    ValueAndGrad out;
    if (want_grad) {
        out.grad = Image(a.width(), a.height(), a.channels());
    }
    const int ow = a.width() - kSsimWindow + 1;
    const int oh = a.height() - kSsimWindow + 1;
    const double windows = static_cast<double>(ow) * oh * a.channels();
    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        const Plane mu_x = filter_valid(extract(a, c, first, &b), k);
        const Plane mu_y = filter_valid(extract(a, c, second, &b), k);
        const Plane e_xx = filter_valid(extract(a, c, square_first, &b), k);
        const Plane e_yy = filter_valid(extract(a, c, square_second, &b), k);
        const Plane e_xy = filter_valid(extract(a, c, product, &b), k);
        Plane g_mu{ow, oh, std::vector<double>(mu_x.v.size())};
        Plane g_xx = g_mu;
        Plane g_xy = g_mu;
        for (std::size_t i = 0; i < mu_x.v.size(); ++i) {
            const double mx = mu_x.v[i], my = mu_y.v[i];
            const double sxx = e_xx.v[i] - mx * mx;
            const double syy = e_yy.v[i] - my * my;
            const double sxy = e_xy.v[i] - mx * my;
            const double a1 = 2 * mx * my + kSsimC1;
            const double a2 = 2 * sxy + kSsimC2;
            const double b1 = mx * mx + my * my + kSsimC1;
            const double b2 = sxx + syy + kSsimC2;
            const double s = (a1 * a2) / (b1 * b2);
            total += s;
            if (want_grad) {
                const double ds_dmx = 2 * my * a2 / (b1 * b2) - s * 2 * mx / b1;
                const double ds_dsxx = -s / b2;
                const double ds_dsxy = 2 * a1 / (b1 * b2);
                // sxx = E[x^2] - mx^2, sxy = E[xy] - mx my
                g_mu.v[i] = (ds_dmx - 2 * mx * ds_dsxx - my * ds_dsxy) / windows;
                g_xx.v[i] = ds_dsxx / windows;
                g_xy.v[i] = ds_dsxy / windows;
            }
        }
        if (want_grad) {
            const Plane back_mu = filter_adjoint(g_mu, a.width(), a.height(), k);
            const Plane back_xx = filter_adjoint(g_xx, a.width(), a.height(), k);
            const Plane back_xy = filter_adjoint(g_xy, a.width(), a.height(), k);
            for (int y = 0; y < a.height(); ++y) {
                for (int x = 0; x < a.width(); ++x) {
                    out.grad.at(y, x, c) = back_mu.at(y, x) + 2 * a.at(y, x, c) * back_xx.at(y, x) +
                                           b.at(y, x, c) * back_xy.at(y, x);
                }
            }
        }
    }
    out.value = total / windows;
    return out;
}

void require_positive_weights(std::initializer_list<double> ws) {
    for (double w : ws) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("LossWeights: weights must be finite and non-negative");
        }
    }
}

} // namespace

void LossWeights::validate() const {
    require_positive_weights({l1, ssim, perceptual, render, distill, loc, sp, sp_tm, smooth});
    if (!(photometric_alpha >= 0.0 && photometric_alpha <= 1.0)) {
        throw ValidationError("LossWeights: photometric_alpha must be in [0, 1]");
    }
}

const LossComponent* LossReport::find(const std::string& name) const {
    for (const auto& c : components) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

double LossReport::value(const std::string& name) const {
    const auto* c = find(name);
    if (!c) {
        throw ValidationError("LossReport: no component named " + name);
    }
    return c->value;
}

double LossReport::weighted_sum() const {
    double s = 0.0;
    for (const auto& c : components) {
        if (c.present) {
            s += c.weight * c.value;
        }
    }
    return s;
}

nlohmann::json LossReport::to_json() const {
    nlohmann::json j;
    j["total"] = total;
    auto& comps = j["components"];
    comps = nlohmann::json::array();
    for (const auto& c : components) {
        nlohmann::json e;
        e["name"] = c.name;
        e["weight"] = c.weight;
        e["present"] = c.present;
        if (c.present) {
            e["value"] = c.value;
        } else {
            e["value"] = nullptr;
        }
        comps.push_back(e);
    }
    return j;
}

double l1_loss(const Image& a, const Image& b) {
    require_same_shape(a, b, "l1_loss");
    if (a.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(a.data()[i] - b.data()[i]);
    }
    return s / static_cast<double>(a.size());
}

ValueAndGrad l1_loss_grad(const Image& pred, const Image& target) {
    ValueAndGrad out{l1_loss(pred, target), Image(pred.width(), pred.height(), pred.channels())};
    const double n = static_cast<double>(std::max<std::size_t>(pred.size(), 1));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        out.grad.data()[i] = sign(pred.data()[i] - target.data()[i]) / n;
    }
    return out;
}

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, false).value; }

double ssim_loss(const Image& a, const Image& b) { return 1.0 - ssim(a, b); }

ValueAndGrad ssim_grad(const Image& pred, const Image& target) {
    return ssim_impl(pred, target, true);
}

double smooth_l1(const Image& pred, const Image& target) {
    return smooth_l1_grad(pred, target).value;
}

ValueAndGrad smooth_l1_grad(const Image& pred, const Image& target) {
    require_same_shape(pred, target, "smooth_l1");
    ValueAndGrad out{0.0, Image(pred.width(), pred.height(), pred.channels())};
    if (pred.empty()) {
        return out;
    }
    const double n = static_cast<double>(pred.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        if (std::abs(d) < 1.0) {
            s += 0.5 * d * d;
            out.grad.data()[i] = d / n;
        } else {
            s += std::abs(d) - 0.5;
            out.grad.data()[i] = sign(d) / n;
        }
    }
    out.value = s / n;
    return out;
}

double lower_median(std::vector<double> values) {
    if (values.empty()) {
        throw ValidationError("lower_median: empty input");
    }
    const auto mid = values.begin() + (values.size() - 1) / 2;
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

namespace {

// Index of the element lower_median selects (first occurrence in storage order).
std::size_t median_index(const std::vector<double>& values) {
    const double m = lower_median(values);
    return static_cast<std::size_t>(std::find(values.begin(), values.end(), m) - values.begin());
}

} // namespace

double affine_invariant_loss(const DepthMap& pred, const DepthMap& teacher) {
    return affine_invariant_loss_grad(pred, teacher).value;
}

ValueAndGrad affine_invariant_loss_grad(const DepthMap& pred, const DepthMap& teacher) {
    require_same_shape(pred.values, teacher.values, "affine_invariant_loss");
    require_finite(pred.values, "affine_invariant_loss");
    require_finite(teacher.values, "affine_invariant_loss");
    const std::size_t n = pred.values.size();
    ValueAndGrad out{0.0, Image(pred.width(), pred.height(), 1)};
    if (n == 0) {
        return out;
    }
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::max(pred.values.data()[i], kLogDepthFloor);
        t[i] = std::max(teacher.values.data()[i], kLogDepthFloor);
    }
    const std::size_t mp = median_index(p);
    const double log_mp = std::log(p[mp]);
    const double log_mt = std::log(lower_median(t));
    std::vector<double> e(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = (std::log(p[i]) - log_mp) - (std::log(t[i]) - log_mt);
        sq += e[i] * e[i];
    }
    out.value = std::sqrt(sq / static_cast<double>(n));
    if (out.value == 0.0) {
        return out;
    }
    // d rms / d log p_i = e_i / (n rms); the median element also shifts every residual.
    const double scale = 1.0 / (static_cast<double>(n) * out.value);
    double sum_e = 0.0;
    for (double v : e) {
        sum_e += v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double g_log = e[i] * scale;
        if (i == mp) {
            g_log -= sum_e * scale;
        }
        const bool floored = pred.values.data()[i] < kLogDepthFloor;
        out.grad.data()[i] = floored ? 0.0 : g_log / p[i];
    }
    return out;
}

double edge_aware_smoothness(const DisparityMap& disparity, const Image& image) {
    return edge_aware_smoothness_grad(disparity, image).value;
}

ValueAndGrad edge_aware_smoothness_grad(const DisparityMap& disparity, const Image& image) {
    const int W = disparity.width();
    const int H = disparity.height();
    if (image.width() != W || image.height() != H) {
        throw ValidationError("edge_aware_smoothness: disparity and image sizes differ");
    }
    if (W < 2 || H < 2) {
        throw ValidationError("edge_aware_smoothness: needs at least 2 pixels per dimension");
    }
    require_finite(disparity.values, "edge_aware_smoothness");
    double mean = 0.0;
    for (double v : disparity.values.data()) {
        mean += v;
    }
    mean /= static_cast<double>(W) * H;
    if (!(mean > 0.0)) {
        throw ValidationError("edge_aware_smoothness: disparity mean must be positive");
    }
    auto edge_weight = [&](int y0, int x0, int y1, int x1) {
        double g = 0.0;
        for (int c = 0; c < image.channels(); ++c) {
            g += std::abs(image.at(y1, x1, c) - image.at(y0, x0, c));
        }
        return std::exp(-g / image.channels());
    };
    const double nx = static_cast<double>(W - 1) * H;
    const double ny = static_cast<double>(W) * (H - 1);
    // Gradient with respect to the normalized disparity first.
    Image g_norm(W, H, 1);
    double value = 0.0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x + 1 < W; ++x) {
            const double d = (disparity.at(y, x + 1) - disparity.at(y, x)) / mean;
            const double w = edge_weight(y, x, y, x + 1) / nx;
            value += std::abs(d) * w;
            g_norm.at(y, x + 1) += sign(d) * w;
            g_norm.at(y, x) -= sign(d) * w;
        }
    }
    for (int y = 0; y + 1 < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double d = (disparity.at(y + 1, x) - disparity.at(y, x)) / mean;
            const double w = edge_weight(y, x, y + 1, x) / ny;
            value += std::abs(d) * w;
            g_norm.at(y + 1, x) += sign(d) * w;
            g_norm.at(y, x) -= sign(d) * w;
        }
    }
    // d_norm = d / mean(d)
    double dot = 0.0;
    for (std::size_t i = 0; i < g_norm.size(); ++i) {
        dot += g_norm.data()[i] * disparity.values.data()[i];
    }
    const double n = static_cast<double>(W) * H;
    ValueAndGrad out{value, Image(W, H, 1)};
    for (std::size_t i = 0; i < g_norm.size(); ++i) {
        out.grad.data()[i] = g_norm.data()[i] / mean - dot / (mean * mean * n);
    }
    return out;
}

double photometric_loss(const Image& pred, const Image& target, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("photometric_loss: alpha must be in [0, 1]");
    }
    require_same_shape(pred, target, "photometric_loss");
    double v = 0.0;
    if (alpha > 0.0) {
        v += alpha * (1.0 - ssim(pred, target)) / 2.0;
    }
    if (alpha < 1.0) {
        v += (1.0 - alpha) * l1_loss(pred, target);
    }
    return v;
}

ValueAndGrad photometric_loss_grad(const Image& pred, const Image& target, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("photometric_loss: alpha must be in [0, 1]");
    }
    require_same_shape(pred, target, "photometric_loss");
    ValueAndGrad out{0.0, Image(pred.width(), pred.height(), pred.channels())};
    if (alpha > 0.0) {
        const ValueAndGrad s = ssim_grad(pred, target);
        out.value += alpha * (1.0 - s.value) / 2.0;
        for (std::size_t i = 0; i < out.grad.size(); ++i) {
            out.grad.data()[i] -= alpha / 2.0 * s.grad.data()[i];
        }
    }
    if (alpha < 1.0) {
        const ValueAndGrad l = l1_loss_grad(pred, target);
        out.value += (1.0 - alpha) * l.value;
        for (std::size_t i = 0; i < out.grad.size(); ++i) {
            out.grad.data()[i] += (1.0 - alpha) * l.grad.data()[i];
        }
    }
    return out;
}

double distill_loss(const DepthMap& pred, const DepthMap& teacher) {
    return smooth_l1(pred.values, teacher.values) + affine_invariant_loss(pred, teacher);
}

ValueAndGrad distill_loss_grad(const DepthMap& pred, const DepthMap& teacher) {
    ValueAndGrad a = smooth_l1_grad(pred.values, teacher.values);
    const ValueAndGrad b = affine_invariant_loss_grad(pred, teacher);
    a.value += b.value;
    for (std::size_t i = 0; i < a.grad.size(); ++i) {
        a.grad.data()[i] += b.grad.data()[i];
    }
    return a;
}

LossReport render_loss(const Image& pred, const Image& gt, const LossWeights& w,
                       const PerceptualMetric& perceptual) {
    w.validate();
    require_same_shape(pred, gt, "render_loss");
    if (w.perceptual > 0.0 && !perceptual) {
        throw ValidationError("render_loss: perceptual weight > 0 but no perceptual metric registered");
    }
    LossReport r;
    r.components.push_back({"l1", l1_loss(pred, gt), w.l1, true});
    r.components.push_back({"ssim", ssim_loss(pred, gt), w.ssim, true});
    if (perceptual) {
        r.components.push_back({"perceptual", perceptual(pred, gt), w.perceptual, true});
    } else {
        r.components.push_back({"perceptual", 0.0, w.perceptual, false});
    }
    r.total = r.weighted_sum();
    return r;
}

ValueAndGrad render_loss_grad(const Image& pred, const Image& gt, const LossWeights& w) {
    w.validate();
    require_same_shape(pred, gt, "render_loss");
    ValueAndGrad out{0.0, Image(pred.width(), pred.height(), pred.channels())};
    if (w.l1 > 0.0) {
        const ValueAndGrad l = l1_loss_grad(pred, gt);
        out.value += w.l1 * l.value;
        for (std::size_t i = 0; i < out.grad.size(); ++i) {
            out.grad.data()[i] += w.l1 * l.grad.data()[i];
        }
    }
    if (w.ssim > 0.0) {
        const ValueAndGrad s = ssim_grad(pred, gt);
        out.value += w.ssim * (1.0 - s.value);
        for (std::size_t i = 0; i < out.grad.size(); ++i) {
            out.grad.data()[i] -= w.ssim * s.grad.data()[i];
        }
    }
    return out;
}

LossReport loc_loss(std::optional<double> tm, std::optional<double> sp,
                    std::optional<double> sp_tm, std::optional<double> smoothness,
                    const LossWeights& w) {
    w.validate();
    LossReport r;
    auto push = [&](const char* name, std::optional<double> v, double weight) {
        if (v && !std::isfinite(*v)) {
            throw NumericalError(std::string("loc_loss: non-finite ") + name);
        }
        r.components.push_back({name, v.value_or(0.0), weight, v.has_value()});
    };
    push("tm", tm, 1.0);
    push("sp", sp, w.sp);
    push("sp_tm", sp_tm, w.sp_tm);
    push("smooth", smoothness, w.smooth);
    r.total = r.weighted_sum();
    return r;
}

LossReport total_loss(const LossReport& render, double distill, double loc, const LossWeights& w) {
    w.validate();
    if (!std::isfinite(render.total) || !std::isfinite(distill) || !std::isfinite(loc)) {
        throw NumericalError("total_loss: non-finite component");
    }
    LossReport r;
    r.components.push_back({"render", render.total, w.render, true});
    r.components.push_back({"distill", distill, w.distill, true});
    r.components.push_back({"loc", loc, w.loc, true});
    r.total = r.weighted_sum();
    return r;
}

double psnr(const Image& pred, const Image& gt) {
    require_same_shape(pred, gt, "psnr");
    if (pred.empty()) {
        return kPsnrCap;
    }
    double se = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - gt.data()[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(pred.size());
    if (mse <= 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

} // namespace vgd
