// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/geometry.hpp"
#include "vgd/image.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vgd {

struct LossWeights {
    // render loss: l1 * L1 + ssim * (1 - SSIM) + perceptual * P
    double l1 = 0.8;
    double ssim = 0.2;
    double perceptual = 0.0;
    // total loss
    double render = 0.01;
    double distill = 0.0005;
    double loc = 1.0;
    // localization loss: L_tm + sp * L_sp + sp_tm * L_sp_tm + smooth * L_smooth
    double sp = 1.0;
    double sp_tm = 1.0;
    double smooth = 1e-3;
    double photometric_alpha = 0.85;

    void validate() const;
};

/// Pairwise metric hook: value of a perceptual distance between two images.
using PerceptualMetric = std::function<double(const Image& pred, const Image& target)>;

struct LossComponent {
    std::string name;
    double value = 0.0;
    double weight = 1.0;
    bool present = true; // false when the term could not be computed (e.g. no callback)
};

struct LossReport {
    std::vector<LossComponent> components;
    double total = 0.0;

    const LossComponent* find(const std::string& name) const;
    double value(const std::string& name) const;
    /// Recomputes total = sum(weight * value) over present components.
    double weighted_sum() const;
    nlohmann::json to_json() const;
};

struct ValueAndGrad {
    double value = 0.0;
    Image grad; // d value / d first argument
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kPsnrCap = 100.0;
inline constexpr double kLogDepthFloor = 1e-6;

double l1_loss(const Image& a, const Image& b);
ValueAndGrad l1_loss_grad(const Image& pred, const Image& target);

/// Mean SSIM over all valid 11x11 windows and channels.
double ssim(const Image& a, const Image& b);
double ssim_loss(const Image& a, const Image& b);
/// Gradient of mean SSIM with respect to the first image.
ValueAndGrad ssim_grad(const Image& pred, const Image& target);

double smooth_l1(const Image& pred, const Image& target);
ValueAndGrad smooth_l1_grad(const Image& pred, const Image& target);

/// Root-mean-square difference of median-normalized log depths.
double affine_invariant_loss(const DepthMap& pred, const DepthMap& teacher);
ValueAndGrad affine_invariant_loss_grad(const DepthMap& pred, const DepthMap& teacher);

/// Lower middle element for even counts.
double lower_median(std::vector<double> values);

/// Edge-aware first-order smoothness of the mean-normalized disparity.
double edge_aware_smoothness(const DisparityMap& disparity, const Image& image);
ValueAndGrad edge_aware_smoothness_grad(const DisparityMap& disparity, const Image& image);

/// alpha * (1 - SSIM) / 2 + (1 - alpha) * L1.
double photometric_loss(const Image& pred, const Image& target, double alpha);
ValueAndGrad photometric_loss_grad(const Image& pred, const Image& target, double alpha);

/// Distillation: smooth L1 + affine-invariant term.
double distill_loss(const DepthMap& pred, const DepthMap& teacher);
ValueAndGrad distill_loss_grad(const DepthMap& pred, const DepthMap& teacher);

LossReport render_loss(const Image& pred, const Image& gt, const LossWeights& w,
                       const PerceptualMetric& perceptual = {});
/// Gradient of the L1 + SSIM part of render_loss with respect to pred.
ValueAndGrad render_loss_grad(const Image& pred, const Image& gt, const LossWeights& w);

/// Photometric slots left as nullopt are reported absent and contribute 0.
LossReport loc_loss(std::optional<double> tm, std::optional<double> sp,
                    std::optional<double> sp_tm, std::optional<double> smoothness,
                    const LossWeights& w);

LossReport total_loss(const LossReport& render, double distill, double loc, const LossWeights& w);

/// 10 log10(1 / MSE), capped at kPsnrCap.
double psnr(const Image& pred, const Image& gt);

} // namespace vgd
