// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/geometry.hpp"

#include "vgd/errors.hpp"

#include <algorithm>
#include <cmath>

namespace vgd {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw ValidationError("CameraIntrinsics: focal lengths must be positive");
    }
    if (width < 1 || height < 1) {
        throw ValidationError("CameraIntrinsics: image size must be positive");
    }
    if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
        throw ValidationError("CameraIntrinsics: principal point must lie inside the image");
    }
}

Pose Pose::from_wxyz(const Eigen::Vector4d& wxyz, const Eigen::Vector3d& t) {
    const double n = wxyz.norm();
    if (!std::isfinite(n) || n < 1e-12) {
        throw ValidationError("Pose: quaternion must be finite and non-zero");
    }
    if (!t.allFinite()) {
        throw ValidationError("Pose: translation must be finite");
    }
    Pose p;
    p.rotation = Eigen::Quaterniond(wxyz[0] / n, wxyz[1] / n, wxyz[2] / n, wxyz[3] / n);
    p.translation = t;
    return p;
}

Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = (a.rotation * b.rotation).normalized();
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

Pose invert(const Pose& p) {
    Pose out;
    out.rotation = p.rotation.conjugate();
    out.translation = -(out.rotation * p.translation);
    return out;
}

Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const CameraIntrinsics& K,
                          const Pose& T) {
    if (!(depth > 0.0) || !std::isfinite(depth)) {
        throw ValidationError("unproject: depth must be positive and finite");
    }
    const Eigen::Vector3d cam((pixel.x() - K.cx) * depth / K.fx, (pixel.y() - K.cy) * depth / K.fy,
                              depth);
    return T.apply(cam);
}

std::optional<Projection> project(const Eigen::Vector3d& world, const CameraIntrinsics& K,
                                  const Pose& T, double z_near) {
    const Eigen::Vector3d cam = T.rotation.conjugate() * (world - T.translation);
    if (cam.z() <= z_near) {
        return std::nullopt;
    }
    Projection out;
    out.pixel = {K.fx * cam.x() / cam.z() + K.cx, K.fy * cam.y() / cam.z() + K.cy};
    out.depth = cam.z();
    return out;
}

DepthMap make_depth_map(int width, int height, double fill) {
    return DepthMap{Image(width, height, 1, fill)};
}

DisparityMap make_disparity_map(int width, int height, double fill) {
    return DisparityMap{Image(width, height, 1, fill)};
}

double disparity_to_depth(double disparity, double focal, double baseline) {
    if (std::isnan(disparity)) {
        throw ValidationError("disparity_to_depth: NaN disparity");
    }
    return focal * baseline / std::max(disparity, kDisparityFloor);
}

DepthMap disparity_to_depth(const DisparityMap& disparity, double focal, double baseline) {
    if (!(focal > 0.0) || !(baseline > 0.0)) {
        throw ValidationError("disparity_to_depth: focal and baseline must be positive");
    }
    DepthMap out{Image(disparity.width(), disparity.height(), 1)};
    auto src = disparity.values.data();
    auto dst = out.values.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = disparity_to_depth(src[i], focal, baseline);
    }
    return out;
}

DisparityMap depth_to_disparity(const DepthMap& depth, double focal, double baseline) {
    if (!(focal > 0.0) || !(baseline > 0.0)) {
        throw ValidationError("depth_to_disparity: focal and baseline must be positive");
    }
    DisparityMap out{Image(depth.width(), depth.height(), 1)};
    auto src = depth.values.data();
    auto dst = out.values.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (!(src[i] > 0.0) || !std::isfinite(src[i])) {
            throw ValidationError("depth_to_disparity: depth must be positive and finite");
        }
        dst[i] = focal * baseline / src[i];
    }
    return out;
}

} // namespace vgd
