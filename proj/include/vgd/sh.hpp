// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>
#include <span>

namespace vgd {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxShBasis = 16;
inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;

/// Real SH basis values up to `degree` in the usual splatting sign convention.
std::array<double, kMaxShBasis> sh_basis(int degree, const Eigen::Vector3d& dir);

/// d basis_k / d dir for each basis function (dir treated as unconstrained).
std::array<Eigen::Vector3d, kMaxShBasis> sh_basis_gradient(int degree, const Eigen::Vector3d& dir);

/// Unclamped color: sum_k basis_k * sh[k * 3 + c] + 0.5.
Eigen::Vector3d eval_sh_unclamped(int degree, std::span<const double> sh, const Eigen::Vector3d& dir);

/// Color clamped to [0, 1].
Eigen::Vector3d eval_sh(int degree, std::span<const double> sh, const Eigen::Vector3d& dir);

} // namespace vgd
