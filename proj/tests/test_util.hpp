// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/gaussian_field.hpp"
#include "vgd/geometry.hpp"
#include "vgd/image.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

namespace vgd::test {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::Vector4d random_unit_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
    return q / q.norm();
}

inline Pose random_pose(std::mt19937_64& rng) {
    return Pose::from_wxyz(random_unit_quaternion(rng),
                           {uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)});
}

inline Image random_image(std::mt19937_64& rng, int w, int h, int c, double lo = 0.0,
                          double hi = 1.0) {
    Image img(w, h, c);
    for (double& v : img.data()) {
        v = uniform(rng, lo, hi);
    }
    return img;
}

inline CameraIntrinsics simple_intrinsics(int w, int h, double f) {
    return {f, f, 0.5 * w, 0.5 * h, w, h};
}

/// Fresh empty directory under the system temp dir, unique per process.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("vgd_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

} // namespace vgd::test
