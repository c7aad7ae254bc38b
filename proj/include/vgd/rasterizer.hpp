// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/gaussian_field.hpp"
#include "vgd/geometry.hpp"
#include "vgd/image.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace vgd {

/// Rasterization knobs. Setting alpha_min, transmittance_floor and
/// cutoff_sigma to zero gives the untruncated compositing sum.
struct RenderConfig {
    int tile_size = 16;
    int sh_degree = kDefaultShDegree; // bands above min(sh_degree, cloud degree) are ignored
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
    double transmittance_floor = 1e-4;
    double alpha_min = 1.0 / 255.0;
    double low_pass = 0.3;      // px^2 added to the screen covariance diagonal
    double cutoff_sigma = 3.0;  // footprint truncated at this Mahalanobis radius; 0 = none
    double z_near = kDefaultNear;
    double z_far = kDefaultFar;
    int threads = 1;            // <= 0 selects hardware concurrency
    bool deterministic = true;  // fixed reduction order in backward, independent of threads

    void validate() const;
};

/// Screen-space footprint of one Gaussian.
struct ScreenGaussian {
    Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d conic = Eigen::Matrix2d::Identity();
    double depth = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double base_opacity = 0.0;
    double extent_x = 0.0; // 3-sigma half widths of the axis-aligned footprint box
    double extent_y = 0.0;
};

struct RenderedImage {
    Image color;       // H x W x 3
    Image accum_alpha; // H x W x 1, 1 - final transmittance
    Image depth;       // H x W x 1, sum of z_i * alpha_i * T_i
};

/// Partials of a scalar loss with respect to raw parameters and means.
struct GradientSet {
    std::vector<Eigen::Vector3d> mean;
    std::vector<Eigen::Vector4d> raw_rotation;
    std::vector<Eigen::Vector3d> raw_scale;
    std::vector<double> raw_opacity;
    std::vector<std::vector<double>> sh;

    static GradientSet zeros(std::size_t count, int sh_degree);
    std::size_t size() const { return mean.size(); }
    bool all_zero() const;
    bool all_finite() const;
};

/// 2 x 3 Jacobian of the pixel coordinates with respect to the camera-frame point,
/// evaluated with x/z and y/z clamped to 1.3x the frustum half-extent.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& cam_point,
                                                const CameraIntrinsics& K);

/// Screen-space projection; nullopt when culled (outside [z_near, z_far] or the
/// 3-sigma box misses the image).
std::optional<ScreenGaussian> project_gaussian(const GaussianPrimitive& p, int sh_degree,
                                               const Camera& cam, const RenderConfig& cfg);

/// Tiled front-to-back compositing.
RenderedImage render(const GaussianCloud& cloud, const Camera& cam, const RenderConfig& cfg);

/// Oracle: every pixel composites the globally depth-sorted list of all
/// non-culled Gaussians without tiling or early loop exit.
RenderedImage render_bruteforce(const GaussianCloud& cloud, const Camera& cam,
                                const RenderConfig& cfg);

/// Reverse-mode gradients of sum(dL_dcolor * render(activate(cloud)).color).
GradientSet backward(const RawCloud& cloud, const Camera& cam, const RenderConfig& cfg,
                     const Image& dL_dcolor);

} // namespace vgd
