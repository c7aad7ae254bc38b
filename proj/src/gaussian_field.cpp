// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/gaussian_field.hpp"

#include "vgd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vgd {

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

RawParamMap::RawParamMap(int width, int height, int sh_degree, double fill)
    : sh_degree_(sh_degree), values_(width, height, raw_channel_count(sh_degree), fill) {
    if (sh_degree < 0 || sh_degree > 3) {
        throw ValidationError("RawParamMap: sh degree must be in [0, 3]");
    }
}

void GaussianCloud::validate() const {
    const std::size_t coeffs = 3 * sh_basis_count(sh_degree);
    if (!sources.empty() && sources.size() != primitives.size()) {
        throw ValidationError("GaussianCloud: sources must be empty or parallel to primitives");
    }
    for (std::size_t i = 0; i < primitives.size(); ++i) {
        const auto& p = primitives[i];
        const std::string where = "GaussianCloud: primitive " + std::to_string(i);
        if (!p.mean.allFinite()) {
            throw ValidationError(where + " has a non-finite mean");
        }
        if (std::abs(p.rotation.norm() - 1.0) > 1e-9) {
            throw ValidationError(where + " rotation is not a unit quaternion");
        }
        for (int a = 0; a < 3; ++a) {
            if (!(p.scale[a] >= kScaleMin * (1 - 1e-12) && p.scale[a] <= kScaleMax * (1 + 1e-12))) {
                throw ValidationError(where + " scale outside [s_min, s_max]");
            }
        }
        if (!(p.opacity > 0.0 && p.opacity < 1.0)) {
            throw ValidationError(where + " opacity outside (0, 1)");
        }
        if (p.sh.size() != coeffs || !all_finite(p.sh)) {
            throw ValidationError(where + " has malformed SH coefficients");
        }
    }
}

double logistic(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Eigen::Vector4d normalize_quaternion(const Eigen::Vector4d& raw) {
    const double n = raw.norm();
    if (n < 1e-12) {
        return {1.0, 0.0, 0.0, 0.0};
    }
    return raw / n;
}

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Eigen::Matrix3d R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return R;
}

ActivatedAttributes activate(std::span<const double> raw, int sh_degree) {
    if (raw.size() != static_cast<std::size_t>(raw_channel_count(sh_degree))) {
        throw ValidationError("activate: channel count does not match sh degree");
    }
    if (!all_finite(raw)) {
        throw ValidationError("activate: non-finite raw parameter");
    }
    ActivatedAttributes out;
    out.rotation = normalize_quaternion(
        {raw[kRawRotation], raw[kRawRotation + 1], raw[kRawRotation + 2], raw[kRawRotation + 3]});
    out.opacity = logistic(raw[kRawOpacity]);
    // logistic saturates to exactly 0 or 1 in double for |x| > ~37.
    out.opacity = std::clamp(out.opacity, 1e-16, 1.0 - 1e-16);
    const double lo = std::log(kScaleMin);
    const double hi = std::log(kScaleMax);
    for (int a = 0; a < 3; ++a) {
        out.scale[a] = std::exp(std::clamp(raw[kRawScale + a], lo, hi));
    }
    out.sh.assign(raw.begin() + kRawSh, raw.end());
    return out;
}

GaussianPrimitive activate(const RawGaussian& raw) {
    std::vector<double> buffer(8 + raw.sh.size());
    for (int i = 0; i < 4; ++i) {
        buffer[kRawRotation + i] = raw.raw_rotation[i];
    }
    buffer[kRawOpacity] = raw.raw_opacity;
    for (int a = 0; a < 3; ++a) {
        buffer[kRawScale + a] = raw.raw_scale[a];
    }
    std::copy(raw.sh.begin(), raw.sh.end(), buffer.begin() + kRawSh);
    const int basis = static_cast<int>(raw.sh.size() / 3);
    const int degree = static_cast<int>(std::lround(std::sqrt(static_cast<double>(basis)))) - 1;
    if (raw.sh.size() % 3 != 0 || sh_basis_count(degree) != basis) {
        throw ValidationError("activate: SH coefficient count is not 3 * (L + 1)^2");
    }
    if (!raw.mean.allFinite()) {
        throw ValidationError("activate: non-finite mean");
    }
    auto attrs = activate(buffer, degree);
    GaussianPrimitive p;
    p.mean = raw.mean;
    p.rotation = attrs.rotation;
    p.scale = attrs.scale;
    p.opacity = attrs.opacity;
    p.sh = std::move(attrs.sh);
    return p;
}

GaussianCloud activate(const RawCloud& raw) {
    GaussianCloud cloud;
    cloud.sh_degree = raw.sh_degree;
    cloud.sources = raw.sources;
    cloud.primitives.reserve(raw.size());
    for (const auto& g : raw.gaussians) {
        cloud.primitives.push_back(activate(g));
    }
    return cloud;
}

RawGaussian to_raw(const GaussianPrimitive& p) {
    RawGaussian r;
    r.mean = p.mean;
    r.raw_rotation = p.rotation;
    r.raw_opacity = logit(p.opacity);
    for (int a = 0; a < 3; ++a) {
        r.raw_scale[a] = std::log(p.scale[a]);
    }
    r.sh = p.sh;
    return r;
}

RawCloud to_raw(const GaussianCloud& cloud) {
    RawCloud r;
    r.sh_degree = cloud.sh_degree;
    r.sources = cloud.sources;
    r.gaussians.reserve(cloud.size());
    for (const auto& p : cloud.primitives) {
        r.gaussians.push_back(to_raw(p));
    }
    return r;
}

Eigen::Matrix3d covariance(const Eigen::Vector4d& rotation, const Eigen::Vector3d& scale) {
    const Eigen::Matrix3d R = quaternion_to_matrix(rotation);
    const Eigen::Matrix3d M = R * scale.asDiagonal();
    Eigen::Matrix3d sigma = M * M.transpose();
    // Exact symmetry; the product is symmetric only up to rounding.
    return 0.5 * (sigma + sigma.transpose());
}

RawCloud lift_raw(const DepthMap& depth, const RawParamMap& raw, const CameraIntrinsics& K,
                  const Pose& T, int camera_id) {
    if (depth.width() != raw.width() || depth.height() != raw.height()) {
        throw ValidationError("lift: depth map and raw parameter map sizes differ");
    }
    K.validate();
    RawCloud cloud;
    cloud.sh_degree = raw.sh_degree();
    const int H = depth.height();
    const int W = depth.width();
    cloud.gaussians.reserve(static_cast<std::size_t>(H) * W);
    cloud.sources.reserve(static_cast<std::size_t>(H) * W);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            auto px = raw.pixel(y, x);
            if (!all_finite(px)) {
                throw ValidationError("lift: non-finite raw parameter at (" + std::to_string(y) +
                                      ", " + std::to_string(x) + ")");
            }
            RawGaussian g;
            g.mean = unproject({x + 0.5, y + 0.5}, depth.at(y, x), K, T);
            g.raw_rotation = {px[kRawRotation], px[kRawRotation + 1], px[kRawRotation + 2],
                              px[kRawRotation + 3]};
            g.raw_opacity = px[kRawOpacity];
            g.raw_scale = {px[kRawScale], px[kRawScale + 1], px[kRawScale + 2]};
            g.sh.assign(px.begin() + kRawSh, px.end());
            cloud.gaussians.push_back(std::move(g));
            cloud.sources.push_back({camera_id, y, x});
        }
    }
    return cloud;
}

GaussianCloud lift(const DepthMap& depth, const RawParamMap& raw, const CameraIntrinsics& K,
                   const Pose& T, int camera_id) {
    return activate(lift_raw(depth, raw, K, T, camera_id));
}

void append(GaussianCloud& into, const GaussianCloud& more) {
    if (into.empty() && into.sources.empty()) {
        into.sh_degree = more.sh_degree;
    }
    if (into.sh_degree != more.sh_degree) {
        throw ValidationError("append: sh degree mismatch");
    }
    const bool with_sources = !more.sources.empty() || !into.sources.empty();
    if (with_sources) {
        into.sources.resize(into.primitives.size());
    }
    into.primitives.insert(into.primitives.end(), more.primitives.begin(), more.primitives.end());
    if (with_sources) {
        if (more.sources.empty()) {
            into.sources.resize(into.primitives.size());
        } else {
            into.sources.insert(into.sources.end(), more.sources.begin(), more.sources.end());
        }
    }
}

void append(RawCloud& into, const RawCloud& more) {
    if (into.gaussians.empty()) {
        into.sh_degree = more.sh_degree;
    }
    if (into.sh_degree != more.sh_degree) {
        throw ValidationError("append: sh degree mismatch");
    }
    into.sources.resize(into.gaussians.size());
    into.gaussians.insert(into.gaussians.end(), more.gaussians.begin(), more.gaussians.end());
    if (more.sources.empty()) {
        into.sources.resize(into.gaussians.size());
    } else {
        into.sources.insert(into.sources.end(), more.sources.begin(), more.sources.end());
    }
}

} // namespace vgd
