// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/image.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

namespace vgd {

/// Pixel coordinates are continuous: pixel (row, col) covers
/// [col, col + 1) x [row, row + 1), so its center is (col + 0.5, row + 0.5).
/// Camera frame follows the pinhole convention x right, y down, z forward.

inline constexpr double kDisparityFloor = 1e-6;
inline constexpr double kDefaultNear = 0.05;
inline constexpr double kDefaultFar = 500.0;

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.5;
    double cy = 0.5;
    int width = 1;
    int height = 1;

    /// Throws ValidationError unless fx, fy > 0 and the principal point lies
    /// strictly inside the image.
    void validate() const;

    bool operator==(const CameraIntrinsics&) const = default;
};

/// Rigid camera-to-world transform: x_world = rotation * x_cam + translation.
struct Pose {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static Pose identity() { return {}; }

    /// Normalizes the quaternion; throws on a zero-norm or non-finite input.
    static Pose from_wxyz(const Eigen::Vector4d& wxyz, const Eigen::Vector3d& t);

    Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }
    Eigen::Vector4d wxyz() const {
        return {rotation.w(), rotation.x(), rotation.y(), rotation.z()};
    }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

/// compose(a, b) applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

struct Camera {
    CameraIntrinsics intrinsics;
    Pose pose; // camera-to-world

    int id = 0;

    Eigen::Vector3d center() const { return pose.translation; }
    /// World-to-camera rotation.
    Eigen::Matrix3d world_to_camera_rotation() const {
        return pose.rotation_matrix().transpose();
    }
    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
        return pose.rotation.conjugate() * (world - pose.translation);
    }
};

struct Projection {
    Eigen::Vector2d pixel;
    double depth = 0.0; // camera-frame z
};

/// Camera-frame point on the ray through `pixel` at camera z == depth, mapped to world.
Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const CameraIntrinsics& K,
                          const Pose& T);

/// Pinhole projection. Returns nullopt (culled) when camera z <= z_near.
std::optional<Projection> project(const Eigen::Vector3d& world, const CameraIntrinsics& K,
                                  const Pose& T, double z_near = kDefaultNear);

// Per-pixel depth and disparity maps. Both wrap a single-channel Image.
struct DepthMap {
    Image values;
    int width() const { return values.width(); }
    int height() const { return values.height(); }
    double at(int y, int x) const { return values.at(y, x); }
    double& at(int y, int x) { return values.at(y, x); }
};

struct DisparityMap {
    Image values;
    int width() const { return values.width(); }
    int height() const { return values.height(); }
    double at(int y, int x) const { return values.at(y, x); }
    double& at(int y, int x) { return values.at(y, x); }
};

DepthMap make_depth_map(int width, int height, double fill);
DisparityMap make_disparity_map(int width, int height, double fill);

/// depth = focal * baseline / max(disparity, kDisparityFloor). NaN input is rejected.
DepthMap disparity_to_depth(const DisparityMap& disparity, double focal, double baseline = 1.0);
DisparityMap depth_to_disparity(const DepthMap& depth, double focal, double baseline = 1.0);

double disparity_to_depth(double disparity, double focal, double baseline = 1.0);

} // namespace vgd
