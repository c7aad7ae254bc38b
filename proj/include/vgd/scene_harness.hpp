// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/gaussian_field.hpp"
#include "vgd/geometry.hpp"
#include "vgd/image.hpp"
#include "vgd/losses.hpp"
#include "vgd/rasterizer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vgd::harness {

/// World frame of the synthetic rig: x forward, y left, z up. Camera i looks
/// along yaw offset + i * spacing, mounted on a circle of `radius` at `mount_height`.
struct RigSpec {
    int cameras = 6;
    double yaw_spacing_deg = 60.0;
    double hfov_deg = 66.0;
    double yaw_offset_deg = 0.0;
    int width = 64;
    int height = 64;
    double radius = 0.3;
    double mount_height = 1.5;

    void validate() const;
};

std::vector<Camera> make_rig(const RigSpec& spec);

/// Angular overlap of adjacent horizontal frusta as a fraction of the FOV:
/// max(0, fov - spacing) / fov.
double pairwise_overlap(const RigSpec& spec);

/// Same cameras with every center shifted by `offset` (world frame); ids kept.
std::vector<Camera> translate_rig(const std::vector<Camera>& cameras, const Eigen::Vector3d& offset);

struct SceneSpec {
    std::uint64_t seed = 0;
    int count = 300;
    std::string layout = "box"; // "box" or "corridor"
    int sh_degree = kDefaultShDegree;
    double radius_min = 4.0;    // box: annulus around the rig
    double radius_max = 14.0;
    double z_min = -0.5;
    double z_max = 3.5;
    double scale_min = 0.15;
    double scale_max = 0.8;
    double opacity_min = 0.5;
    double opacity_max = 0.95;
    double color_min = 0.1;
    double color_max = 0.9;
    double sh_detail = 0.05;    // half range of higher-band coefficients

    void validate() const;
};

GaussianCloud make_scene(const SceneSpec& spec);

/// Expected-depth channel of the rasterizer, optionally times exp(noise_std * N(0, 1))
/// per pixel from a generator seeded with `seed`, then floored at cfg.z_near.
DepthMap teacher_depth(const GaussianCloud& cloud, const Camera& camera, double noise_std,
                       std::uint64_t seed = 0, const RenderConfig& cfg = {});

/// Opacity-normalized expected depth (sum z a T / accumulated alpha). Pixels
/// whose accumulated alpha is below `min_alpha` get `fill`. Same noise model
/// as teacher_depth.
DepthMap completed_depth(const GaussianCloud& cloud, const Camera& camera, double noise_std,
                         double fill, std::uint64_t seed = 0, const RenderConfig& cfg = {},
                         double min_alpha = 0.05);

struct InitSpec {
    double opacity = 0.5;
    double footprint = 0.7; // world scale = footprint * depth / fx
};

/// Per-pixel raw parameters for a lifted initialization: identity rotation,
/// isotropic scale matched to the pixel footprint, uniform opacity, SH zero
/// (gray).
RawParamMap initial_params(const DepthMap& depth, const CameraIntrinsics& K, int sh_degree,
                           const InitSpec& spec = {});

struct MetricRow {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> lpips;
};

struct MetricTable {
    std::vector<MetricRow> rows; // per view, then "mean"

    const MetricRow& mean() const { return rows.back(); }
    /// Tab-separated, header "view psnr ssim [lpips]", values printed with %.17g.
    std::string to_tsv() const;
    static MetricTable from_tsv(const std::string& text);
};

MetricTable evaluate(const std::vector<Image>& pred, const std::vector<Image>& gt,
                     const std::vector<std::string>& names = {},
                     const PerceptualMetric& perceptual = {});

/// Renders every camera with the given renderer choice.
std::vector<Image> render_views(const GaussianCloud& cloud, const std::vector<Camera>& cameras,
                                const RenderConfig& cfg, bool oracle = false);

/// Formats a double with %.17g.
std::string format_exact(double v);

} // namespace vgd::harness
