// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/sh.hpp"

#include "vgd/errors.hpp"

#include <algorithm>

namespace vgd {

namespace {

constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};

void check_degree(int degree) {
    if (degree < 0 || degree > kMaxShDegree) {
        throw ValidationError("sh: degree must be in [0, 3]");
    }
}

} // namespace

std::array<double, kMaxShBasis> sh_basis(int degree, const Eigen::Vector3d& d) {
    check_degree(degree);
    std::array<double, kMaxShBasis> b{};
    const double x = d.x(), y = d.y(), z = d.z();
    b[0] = kShC0;
    if (degree >= 1) {
        b[1] = -kShC1 * y;
        b[2] = kShC1 * z;
        b[3] = -kShC1 * x;
    }
    if (degree >= 2) {
        const double xx = x * x, yy = y * y, zz = z * z;
        b[4] = kC2[0] * x * y;
        b[5] = kC2[1] * y * z;
        b[6] = kC2[2] * (2 * zz - xx - yy);
        b[7] = kC2[3] * x * z;
        b[8] = kC2[4] * (xx - yy);
        if (degree >= 3) {
            b[9] = kC3[0] * y * (3 * xx - yy);
            b[10] = kC3[1] * x * y * z;
            b[11] = kC3[2] * y * (4 * zz - xx - yy);
            b[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
            b[13] = kC3[4] * x * (4 * zz - xx - yy);
            b[14] = kC3[5] * z * (xx - yy);
            b[15] = kC3[6] * x * (xx - 3 * yy);
        }
    }
    return b;
}

std::array<Eigen::Vector3d, kMaxShBasis> sh_basis_gradient(int degree, const Eigen::Vector3d& d) {
    check_degree(degree);
    std::array<Eigen::Vector3d, kMaxShBasis> g;
    g.fill(Eigen::Vector3d::Zero());
    const double x = d.x(), y = d.y(), z = d.z();
    if (degree >= 1) {
        g[1] = {0, -kShC1, 0};
        g[2] = {0, 0, kShC1};
        g[3] = {-kShC1, 0, 0};
    }
    if (degree >= 2) {
        g[4] = kC2[0] * Eigen::Vector3d(y, x, 0);
        g[5] = kC2[1] * Eigen::Vector3d(0, z, y);
        g[6] = kC2[2] * Eigen::Vector3d(-2 * x, -2 * y, 4 * z);
        g[7] = kC2[3] * Eigen::Vector3d(z, 0, x);
        g[8] = kC2[4] * Eigen::Vector3d(2 * x, -2 * y, 0);
        if (degree >= 3) {
            const double xx = x * x, yy = y * y, zz = z * z;
            g[9] = kC3[0] * Eigen::Vector3d(6 * x * y, 3 * xx - 3 * yy, 0);
            g[10] = kC3[1] * Eigen::Vector3d(y * z, x * z, x * y);
            g[11] = kC3[2] * Eigen::Vector3d(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
            g[12] = kC3[3] * Eigen::Vector3d(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
            g[13] = kC3[4] * Eigen::Vector3d(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
            g[14] = kC3[5] * Eigen::Vector3d(2 * x * z, -2 * y * z, xx - yy);
            g[15] = kC3[6] * Eigen::Vector3d(3 * xx - 3 * yy, -6 * x * y, 0);
        }
    }
    return g;
}

Eigen::Vector3d eval_sh_unclamped(int degree, std::span<const double> sh,
                                  const Eigen::Vector3d& dir) {
    const int basis = (degree + 1) * (degree + 1);
    if (sh.size() < static_cast<std::size_t>(3 * basis)) {
        throw ValidationError("eval_sh: too few coefficients for degree");
    }
    const auto b = sh_basis(degree, dir);
    Eigen::Vector3d rgb = Eigen::Vector3d::Constant(0.5);
    for (int k = 0; k < basis; ++k) {
        for (int c = 0; c < 3; ++c) {
            rgb[c] += b[k] * sh[k * 3 + c];
        }
    }
    return rgb;
}

Eigen::Vector3d eval_sh(int degree, std::span<const double> sh, const Eigen::Vector3d& dir) {
    Eigen::Vector3d rgb = eval_sh_unclamped(degree, sh, dir);
    for (int c = 0; c < 3; ++c) {
        rgb[c] = std::clamp(rgb[c], 0.0, 1.0);
    }
    return rgb;
}

} // namespace vgd
