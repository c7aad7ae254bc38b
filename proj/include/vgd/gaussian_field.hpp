// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/geometry.hpp"
#include "vgd/image.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace vgd {

inline constexpr double kScaleMin = 1e-4;
inline constexpr double kScaleMax = 50.0;
inline constexpr int kDefaultShDegree = 1;

/// Number of SH coefficients per color channel for degree L, i.e. (L + 1)^2.
constexpr int sh_basis_count(int degree) { return (degree + 1) * (degree + 1); }

/// Channels of one RawParamMap pixel: 4 rotation + 1 opacity + 3 scale + 3 * (L + 1)^2 SH.
constexpr int raw_channel_count(int degree) { return 8 + 3 * sh_basis_count(degree); }

// Channel offsets inside one raw pixel.
inline constexpr int kRawRotation = 0;
inline constexpr int kRawOpacity = 4;
inline constexpr int kRawScale = 5;
inline constexpr int kRawSh = 8;

/// SH coefficients are stored band-major: sh[band * 3 + channel].
struct GaussianPrimitive {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation{1.0, 0.0, 0.0, 0.0}; // unit quaternion, wxyz
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    double opacity = 0.5;
    std::vector<double> sh;
};

/// Pre-activation parameters of one Gaussian; the optimizable degrees of freedom.
struct RawGaussian {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector4d raw_rotation{1.0, 0.0, 0.0, 0.0};
    double raw_opacity = 0.0;
    Eigen::Vector3d raw_scale = Eigen::Vector3d::Zero();
    std::vector<double> sh;
};

/// Where a lifted primitive came from. camera < 0 means "not lifted".
struct GaussianSource {
    int camera = -1;
    int row = -1;
    int col = -1;
};

struct GaussianCloud {
    int sh_degree = kDefaultShDegree;
    std::vector<GaussianPrimitive> primitives;
    std::vector<GaussianSource> sources; // empty or parallel to primitives

    std::size_t size() const { return primitives.size(); }
    bool empty() const { return primitives.empty(); }

    /// Throws ValidationError if any primitive breaks the activated-attribute invariants.
    void validate() const;
};

struct RawCloud {
    int sh_degree = kDefaultShDegree;
    std::vector<RawGaussian> gaussians;
    std::vector<GaussianSource> sources;

    std::size_t size() const { return gaussians.size(); }
};

/// Per-pixel raw network outputs for one view.
class RawParamMap {
public:
    RawParamMap() = default;
    RawParamMap(int width, int height, int sh_degree, double fill = 0.0);

    int width() const { return values_.width(); }
    int height() const { return values_.height(); }
    int sh_degree() const { return sh_degree_; }
    int channels() const { return values_.channels(); }

    std::span<double> pixel(int y, int x) { return values_.pixel(y, x); }
    std::span<const double> pixel(int y, int x) const { return values_.pixel(y, x); }

    Image& values() { return values_; }
    const Image& values() const { return values_; }

private:
    int sh_degree_ = kDefaultShDegree;
    Image values_;
};

struct ActivatedAttributes {
    Eigen::Vector4d rotation{1.0, 0.0, 0.0, 0.0};
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    double opacity = 0.5;
    std::vector<double> sh;
};

double logistic(double x);
double logit(double p);

/// Normalized quaternion; inputs with norm below 1e-12 map to identity.
Eigen::Vector4d normalize_quaternion(const Eigen::Vector4d& raw);

/// Rotation matrix of a unit quaternion in wxyz order.
Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& wxyz);

/// Activation of one raw pixel (channel layout per raw_channel_count).
ActivatedAttributes activate(std::span<const double> raw, int sh_degree);
GaussianPrimitive activate(const RawGaussian& raw);
GaussianCloud activate(const RawCloud& raw);

/// Inverse of activate for primitives whose scale lies inside the clamp range.
RawGaussian to_raw(const GaussianPrimitive& p);
RawCloud to_raw(const GaussianCloud& cloud);

/// Sigma = R diag(scale)^2 R^T.
Eigen::Matrix3d covariance(const Eigen::Vector4d& rotation, const Eigen::Vector3d& scale);

/// One primitive per pixel, row-major. The mean is the unprojected pixel
/// center at the pixel's depth; attributes stay raw.
RawCloud lift_raw(const DepthMap& depth, const RawParamMap& raw, const CameraIntrinsics& K,
                  const Pose& T, int camera_id = 0);

GaussianCloud lift(const DepthMap& depth, const RawParamMap& raw, const CameraIntrinsics& K,
                   const Pose& T, int camera_id = 0);

/// Appends `more` to `into`; sh degrees must agree.
void append(GaussianCloud& into, const GaussianCloud& more);
void append(RawCloud& into, const RawCloud& more);

} // namespace vgd
