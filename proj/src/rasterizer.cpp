// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/rasterizer.hpp"

#include "vgd/errors.hpp"
#include "vgd/parallel.hpp"
#include "vgd/sh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

namespace vgd {

namespace {

int effective_degree(const RenderConfig& cfg, int cloud_degree) {
    return std::min(cfg.sh_degree, cloud_degree);
}

struct Visible {
    std::vector<std::optional<ScreenGaussian>> screen;
    std::vector<std::uint32_t> order; // visible indices sorted by (depth, index)
};

bool depth_less(const std::vector<std::optional<ScreenGaussian>>& s, std::uint32_t a,
                std::uint32_t b) {
    const double da = s[a]->depth;
    const double db = s[b]->depth;
    return da < db || (da == db && a < b);
}

Visible project_all(const GaussianCloud& cloud, const Camera& cam, const RenderConfig& cfg) {
    Visible v;
    v.screen.resize(cloud.size());
    const int degree = effective_degree(cfg, cloud.sh_degree);
    parallel_for(cloud.size(), cfg.threads, [&](std::size_t i, int) {
        v.screen[i] = project_gaussian(cloud.primitives[i], degree, cam, cfg);
    });
    for (std::uint32_t i = 0; i < cloud.size(); ++i) {
        if (v.screen[i]) {
            v.order.push_back(i);
        }
    }
    std::sort(v.order.begin(), v.order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return depth_less(v.screen, a, b); });
    return v;
}

/// Footprint alpha at a pixel center, or 0 when outside the truncated support.
struct Fragment {
    double alpha = 0.0;
    double falloff = 0.0; // exp(-power / 2)
    Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

inline Fragment eval_fragment(const ScreenGaussian& g, double px, double py,
                              const RenderConfig& cfg) {
    Fragment f;
    f.offset = {px - g.mean2d.x(), py - g.mean2d.y()};
    const double power = f.offset.dot(g.conic * f.offset);
    if (cfg.cutoff_sigma > 0.0 && power > cfg.cutoff_sigma * cfg.cutoff_sigma) {
        return f;
    }
    f.falloff = std::exp(-0.5 * power);
    f.alpha = g.base_opacity * f.falloff;
    return f;
}

struct PixelResult {
    Eigen::Vector3d color;
    double alpha;
    double depth;
};

[[noreturn]] void fail_non_finite(int x, int y) {
    throw NumericalError("render: non-finite value at pixel (row " + std::to_string(y) + ", col " +
                         std::to_string(x) + ")");
}

template <typename IndexRange>
PixelResult composite_pixel(const IndexRange& list, const Visible& v, int x, int y,
                            const RenderConfig& cfg) {
    const double px = x + 0.5;
    const double py = y + 0.5;
    double T = 1.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double depth = 0.0;
    for (std::uint32_t idx : list) {
        const ScreenGaussian& g = *v.screen[idx];
        const Fragment f = eval_fragment(g, px, py, cfg);
        if (f.alpha <= 0.0 || f.alpha < cfg.alpha_min) {
            continue;
        }
        const double next_T = T * (1.0 - f.alpha);
        if (next_T < cfg.transmittance_floor) {
            break;
        }
        color += g.color * (f.alpha * T);
        depth += g.depth * f.alpha * T;
        T = next_T;
    }
    color += cfg.background * T;
    if (!color.allFinite() || !std::isfinite(depth)) {
        fail_non_finite(x, y);
    }
    return {color, 1.0 - T, depth};
}

struct TileGrid {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<std::uint32_t>> lists;
};

TileGrid bin_tiles(const Visible& v, const Camera& cam, const RenderConfig& cfg) {
    const int W = cam.intrinsics.width;
    const int H = cam.intrinsics.height;
    const int ts = cfg.tile_size;
    TileGrid grid;
    grid.tiles_x = (W + ts - 1) / ts;
    grid.tiles_y = (H + ts - 1) / ts;
    grid.lists.resize(static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y);
    const bool truncated = cfg.cutoff_sigma > 0.0;
    // v.order is already depth sorted, so each tile list inherits the order.
    for (std::uint32_t idx : v.order) {
        const ScreenGaussian& g = *v.screen[idx];
        int x0 = 0, x1 = grid.tiles_x - 1, y0 = 0, y1 = grid.tiles_y - 1;
        if (truncated) {
            const double rx = cfg.cutoff_sigma * std::sqrt(g.cov2d(0, 0));
            const double ry = cfg.cutoff_sigma * std::sqrt(g.cov2d(1, 1));
            // Pixel centers sit at +0.5; one pixel of slack keeps the box conservative.
            const double minx = g.mean2d.x() - rx - 1.0, maxx = g.mean2d.x() + rx + 1.0;
            const double miny = g.mean2d.y() - ry - 1.0, maxy = g.mean2d.y() + ry + 1.0;
            if (maxx < 0.0 || maxy < 0.0 || minx > W || miny > H) {
                continue;
            }
            x0 = std::clamp(static_cast<int>(std::floor(minx / ts)), 0, grid.tiles_x - 1);
            x1 = std::clamp(static_cast<int>(std::floor(maxx / ts)), 0, grid.tiles_x - 1);
            y0 = std::clamp(static_cast<int>(std::floor(miny / ts)), 0, grid.tiles_y - 1);
            y1 = std::clamp(static_cast<int>(std::floor(maxy / ts)), 0, grid.tiles_y - 1);
        }
        for (int ty = y0; ty <= y1; ++ty) {
            for (int tx = x0; tx <= x1; ++tx) {
                grid.lists[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(idx);
            }
        }
    }
    return grid;
}

RenderedImage allocate(const Camera& cam) {
    const int W = cam.intrinsics.width;
    const int H = cam.intrinsics.height;
    return {Image(W, H, 3), Image(W, H, 1), Image(W, H, 1)};
}

void store(RenderedImage& out, int x, int y, const PixelResult& r) {
    for (int c = 0; c < 3; ++c) {
        out.color.at(y, x, c) = r.color[c];
    }
    out.accum_alpha.at(y, x) = r.alpha;
    out.depth.at(y, x) = r.depth;
}

// Screen-space partials of one fragment list entry:
// [0..1] mean2d, [2..4] conic (m00, m01, m11), [5..7] color, [8] base opacity.
using ScreenGrad = std::array<double, 9>;

} // namespace

void RenderConfig::validate() const {
    if (tile_size < 1) {
        throw ValidationError("RenderConfig: tile_size must be >= 1");
    }
    if (!(transmittance_floor >= 0.0 && transmittance_floor < 1.0)) {
        throw ValidationError("RenderConfig: transmittance_floor must be in [0, 1)");
    }
    if (!(alpha_min >= 0.0 && alpha_min < 1.0)) {
        throw ValidationError("RenderConfig: alpha_min must be in [0, 1)");
    }
    if (!(low_pass >= 0.0) || !(cutoff_sigma >= 0.0)) {
        throw ValidationError("RenderConfig: low_pass and cutoff_sigma must be non-negative");
    }
    if (sh_degree < 0 || sh_degree > kMaxShDegree) {
        throw ValidationError("RenderConfig: sh_degree must be in [0, 3]");
    }
    if (!(z_near > 0.0) || !(z_far > z_near)) {
        throw ValidationError("RenderConfig: need 0 < z_near < z_far");
    }
    if (!background.allFinite()) {
        throw ValidationError("RenderConfig: background must be finite");
    }
}

GradientSet GradientSet::zeros(std::size_t count, int sh_degree) {
    GradientSet g;
    g.mean.assign(count, Eigen::Vector3d::Zero());
    g.raw_rotation.assign(count, Eigen::Vector4d::Zero());
    g.raw_scale.assign(count, Eigen::Vector3d::Zero());
    g.raw_opacity.assign(count, 0.0);
    g.sh.assign(count, std::vector<double>(3 * sh_basis_count(sh_degree), 0.0));
    return g;
}

bool GradientSet::all_zero() const {
    for (std::size_t i = 0; i < size(); ++i) {
        if (!mean[i].isZero(0) || !raw_rotation[i].isZero(0) || !raw_scale[i].isZero(0) ||
            raw_opacity[i] != 0.0) {
            return false;
        }
        for (double s : sh[i]) {
            if (s != 0.0) {
                return false;
            }
        }
    }
    return true;
}

bool GradientSet::all_finite() const {
    for (std::size_t i = 0; i < size(); ++i) {
        if (!mean[i].allFinite() || !raw_rotation[i].allFinite() || !raw_scale[i].allFinite() ||
            !std::isfinite(raw_opacity[i])) {
            return false;
        }
        for (double s : sh[i]) {
            if (!std::isfinite(s)) {
                return false;
            }
        }
    }
    return true;
}

namespace {

// Camera point used for the Jacobian: x/z and y/z limited to 1.3x the frustum
// half-extent so off-screen Gaussians near the image plane do not explode.
struct JacobianPoint {
    Eigen::Vector3d t;
    bool clamped_x = false;
    bool clamped_y = false;
};

JacobianPoint jacobian_point(const Eigen::Vector3d& t, const CameraIntrinsics& K) {
    const double lim_x = 1.3 * std::max(K.cx, K.width - K.cx) / K.fx;
    const double lim_y = 1.3 * std::max(K.cy, K.height - K.cy) / K.fy;
    const double tx = t.x() / t.z();
    const double ty = t.y() / t.z();
    JacobianPoint j{t};
    if (std::abs(tx) > lim_x) {
        j.t.x() = std::copysign(lim_x, tx) * t.z();
        j.clamped_x = true;
    }
    if (std::abs(ty) > lim_y) {
        j.t.y() = std::copysign(lim_y, ty) * t.z();
        j.clamped_y = true;
    }
    return j;
}

} // namespace

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& cam_point,
                                                const CameraIntrinsics& K) {
    const Eigen::Vector3d t = jacobian_point(cam_point, K).t;
    const double iz = 1.0 / t.z();
    Eigen::Matrix<double, 2, 3> J;
    J << K.fx * iz, 0.0, -K.fx * t.x() * iz * iz, 0.0, K.fy * iz, -K.fy * t.y() * iz * iz;
    return J;
}

std::optional<ScreenGaussian> project_gaussian(const GaussianPrimitive& p, int sh_degree,
                                               const Camera& cam, const RenderConfig& cfg) {
    const CameraIntrinsics& K = cam.intrinsics;
    if (!p.mean.allFinite() || !p.rotation.allFinite() || !p.scale.allFinite() ||
        !std::isfinite(p.opacity)) {
        throw NumericalError("project_gaussian: non-finite primitive attributes");
    }
    const Eigen::Vector3d t = cam.to_camera(p.mean);
    if (t.z() <= cfg.z_near || t.z() > cfg.z_far) {
        return std::nullopt;
    }
    const Eigen::Matrix3d Wc = cam.world_to_camera_rotation();
    const Eigen::Matrix<double, 2, 3> JW = projection_jacobian(t, K) * Wc;
    Eigen::Matrix2d cov2d = JW * covariance(p.rotation, p.scale) * JW.transpose();
    cov2d(0, 1) = cov2d(1, 0) = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
    cov2d(0, 0) += cfg.low_pass;
    cov2d(1, 1) += cfg.low_pass;
    const double det = cov2d.determinant();
    if (!(det > 0.0) || !std::isfinite(det)) {
        return std::nullopt;
    }

    ScreenGaussian s;
    s.mean2d = {K.fx * t.x() / t.z() + K.cx, K.fy * t.y() / t.z() + K.cy};
    s.cov2d = cov2d;
    s.conic << cov2d(1, 1) / det, -cov2d(0, 1) / det, -cov2d(1, 0) / det, cov2d(0, 0) / det;
    s.depth = t.z();
    s.base_opacity = p.opacity;
    const double sigma_extent = std::max(3.0, cfg.cutoff_sigma);
    s.extent_x = sigma_extent * std::sqrt(cov2d(0, 0));
    s.extent_y = sigma_extent * std::sqrt(cov2d(1, 1));
    if (s.mean2d.x() + s.extent_x < 0.0 || s.mean2d.x() - s.extent_x > K.width ||
        s.mean2d.y() + s.extent_y < 0.0 || s.mean2d.y() - s.extent_y > K.height) {
        return std::nullopt;
    }
    const Eigen::Vector3d dir = (p.mean - cam.center()).normalized();
    s.color = eval_sh(sh_degree, p.sh, dir);
    return s;
}

RenderedImage render(const GaussianCloud& cloud, const Camera& cam, const RenderConfig& cfg) {
    cfg.validate();
    cam.intrinsics.validate();
    const Visible v = project_all(cloud, cam, cfg);
    const TileGrid grid = bin_tiles(v, cam, cfg);
    RenderedImage out = allocate(cam);
    const int W = cam.intrinsics.width;
    const int H = cam.intrinsics.height;
    const int ts = cfg.tile_size;
    parallel_for(grid.lists.size(), cfg.threads, [&](std::size_t tile, int) {
        const int tx = static_cast<int>(tile) % grid.tiles_x;
        const int ty = static_cast<int>(tile) / grid.tiles_x;
        const auto& list = grid.lists[tile];
        for (int y = ty * ts; y < std::min(H, (ty + 1) * ts); ++y) {
            for (int x = tx * ts; x < std::min(W, (tx + 1) * ts); ++x) {
                store(out, x, y, composite_pixel(list, v, x, y, cfg));
            }
        }
    });
    return out;
}

RenderedImage render_bruteforce(const GaussianCloud& cloud, const Camera& cam,
                                const RenderConfig& cfg) {
    cfg.validate();
    cam.intrinsics.validate();
    const Visible v = project_all(cloud, cam, cfg);
    RenderedImage out = allocate(cam);
    for (int y = 0; y < cam.intrinsics.height; ++y) {
        for (int x = 0; x < cam.intrinsics.width; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            double T = 1.0;
            bool saturated = false;
            Eigen::Vector3d color = Eigen::Vector3d::Zero();
            double depth = 0.0;
            // Visit every Gaussian; once saturated, remaining fragments are ignored.
            for (std::uint32_t idx : v.order) {
                const ScreenGaussian& g = *v.screen[idx];
                const Fragment f = eval_fragment(g, px, py, cfg);
                const bool contributes = !saturated && f.alpha > 0.0 && f.alpha >= cfg.alpha_min;
                if (!contributes) {
                    continue;
                }
                const double next_T = T * (1.0 - f.alpha);
                if (next_T < cfg.transmittance_floor) {
                    saturated = true;
                    continue;
                }
                color += g.color * (f.alpha * T);
                depth += g.depth * f.alpha * T;
                T = next_T;
            }
            color += cfg.background * T;
            if (!color.allFinite() || !std::isfinite(depth)) {
                fail_non_finite(x, y);
            }
            store(out, x, y, {color, 1.0 - T, depth});
        }
    }
    return out;
}

namespace {

struct Contribution {
    std::uint32_t entry; // position inside the tile list
    double alpha;
    double falloff;
    double T; // transmittance in front of this fragment
    Eigen::Vector2d offset;
};

// Back-propagates one pixel into per-entry screen gradients.
void backward_pixel(const std::vector<std::uint32_t>& list, const Visible& v, int x, int y,
                    const RenderConfig& cfg, const Eigen::Vector3d& dL_dC,
                    std::vector<Contribution>& scratch, ScreenGrad* grads) {
    const double px = x + 0.5;
    const double py = y + 0.5;
    scratch.clear();
    double T = 1.0;
    for (std::uint32_t e = 0; e < list.size(); ++e) {
        const ScreenGaussian& g = *v.screen[list[e]];
        const Fragment f = eval_fragment(g, px, py, cfg);
        if (f.alpha <= 0.0 || f.alpha < cfg.alpha_min) {
            continue;
        }
        const double next_T = T * (1.0 - f.alpha);
        if (next_T < cfg.transmittance_floor) {
            break;
        }
        scratch.push_back({e, f.alpha, f.falloff, T, f.offset});
        T = next_T;
    }
    // accum holds the color composited behind the current fragment, normalized
    // by the transmittance in front of it.
    Eigen::Vector3d accum = cfg.background;
    for (auto it = scratch.rbegin(); it != scratch.rend(); ++it) {
        const ScreenGaussian& g = *v.screen[list[it->entry]];
        ScreenGrad& out = grads[it->entry];
        const double w = it->alpha * it->T;
        for (int c = 0; c < 3; ++c) {
            out[5 + c] += w * dL_dC[c];
        }
        const double dL_dalpha = it->T * dL_dC.dot(g.color - accum);
        accum = g.color * it->alpha + accum * (1.0 - it->alpha);

        out[8] += dL_dalpha * it->falloff;
        // alpha = O * exp(-power / 2), power = d^T conic d, d = pixel - mean2d
        const double dL_dpower = -0.5 * it->alpha * dL_dalpha;
        const Eigen::Vector2d& d = it->offset;
        const Eigen::Vector2d conic_d = g.conic * d;
        out[0] += dL_dpower * -2.0 * conic_d.x();
        out[1] += dL_dpower * -2.0 * conic_d.y();
        out[2] += dL_dpower * d.x() * d.x();
        out[3] += dL_dpower * d.x() * d.y();
        out[4] += dL_dpower * d.y() * d.y();
    }
}

// dL/dR (3x3) -> dL/dq for a unit quaternion q = (w, x, y, z).
Eigen::Vector4d rotation_matrix_vjp(const Eigen::Vector4d& q, const Eigen::Matrix3d& G) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Eigen::Vector4d g;
    g[0] = 2 * (-z * G(0, 1) + y * G(0, 2) + z * G(1, 0) - x * G(1, 2) - y * G(2, 0) +
                x * G(2, 1));
    g[1] = 2 * (y * G(0, 1) + z * G(0, 2) + y * G(1, 0) - w * G(1, 2) + z * G(2, 0) +
                w * G(2, 1)) -
           4 * x * (G(1, 1) + G(2, 2));
    g[2] = 2 * (x * G(0, 1) + w * G(0, 2) + x * G(1, 0) + z * G(1, 2) - w * G(2, 0) +
                z * G(2, 1)) -
           4 * y * (G(0, 0) + G(2, 2));
    g[3] = 2 * (-w * G(0, 1) + x * G(0, 2) + w * G(1, 0) + y * G(1, 2) + x * G(2, 0) +
                y * G(2, 1)) -
           4 * z * (G(0, 0) + G(1, 1));
    return g;
}

// Chains screen-space partials back through projection, covariance, SH and activation.
void backward_primitive(const RawGaussian& raw, const GaussianPrimitive& p, int sh_degree,
                        const Camera& cam, const RenderConfig& cfg, const ScreenGaussian& s,
                        const ScreenGrad& sg, GradientSet& out, std::size_t i) {
    const CameraIntrinsics& K = cam.intrinsics;
    const Eigen::Matrix3d Wc = cam.world_to_camera_rotation();
    const Eigen::Vector3d t = cam.to_camera(p.mean);
    const Eigen::Matrix<double, 2, 3> J = projection_jacobian(t, K);
    const Eigen::Matrix<double, 2, 3> JW = J * Wc;
    const Eigen::Matrix3d R = quaternion_to_matrix(p.rotation);
    const Eigen::Matrix3d M = R * p.scale.asDiagonal();
    const Eigen::Matrix3d sigma = M * M.transpose();

    // conic gradient as a symmetric matrix: power = d^T C d.
    Eigen::Matrix2d G_conic;
    G_conic << sg[2], sg[3], sg[3], sg[4];
    const Eigen::Matrix2d G_cov2d = -s.conic * G_conic * s.conic;
    const Eigen::Matrix3d G_sigma = JW.transpose() * G_cov2d * JW;
    const Eigen::Matrix<double, 2, 3> G_JW = 2.0 * G_cov2d * JW * sigma;
    const Eigen::Matrix<double, 2, 3> G_J = G_JW * Wc.transpose();

    // d/dt of J entries and of the projected mean.
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    const double iz3 = iz2 * iz;
    Eigen::Vector3d g_t = Eigen::Vector3d::Zero();
    // A clamped coordinate is tj = c * t.z, so J(., 2) then depends on t.z only.
    const JacobianPoint jp = jacobian_point(t, K);
    g_t.z() += G_J(0, 0) * (-K.fx * iz2) + G_J(1, 1) * (-K.fy * iz2);
    if (jp.clamped_x) {
        g_t.z() += G_J(0, 2) * (K.fx * jp.t.x() * iz3);
    } else {
        g_t.x() += G_J(0, 2) * (-K.fx * iz2);
        g_t.z() += G_J(0, 2) * (2 * K.fx * t.x() * iz3);
    }
    if (jp.clamped_y) {
        g_t.z() += G_J(1, 2) * (K.fy * jp.t.y() * iz3);
    } else {
        g_t.y() += G_J(1, 2) * (-K.fy * iz2);
        g_t.z() += G_J(1, 2) * (2 * K.fy * t.y() * iz3);
    }
    const double gu = sg[0];
    const double gv = sg[1];
    g_t.x() += gu * K.fx * iz;
    g_t.y() += gv * K.fy * iz;
    g_t.z() += -gu * K.fx * t.x() * iz2 - gv * K.fy * t.y() * iz2;

    Eigen::Vector3d g_mean = Wc.transpose() * g_t;

    // Color: clamped channels pass no gradient.
    const Eigen::Vector3d offset = p.mean - cam.center();
    const double dist = offset.norm();
    const Eigen::Vector3d dir = offset / dist;
    const Eigen::Vector3d unclamped = eval_sh_unclamped(sh_degree, p.sh, dir);
    Eigen::Vector3d g_color(sg[5], sg[6], sg[7]);
    for (int c = 0; c < 3; ++c) {
        if (unclamped[c] < 0.0 || unclamped[c] > 1.0) {
            g_color[c] = 0.0;
        }
    }
    const auto basis = sh_basis(sh_degree, dir);
    const auto dbasis = sh_basis_gradient(sh_degree, dir);
    const int nb = sh_basis_count(sh_degree);
    Eigen::Vector3d g_dir = Eigen::Vector3d::Zero();
    for (int k = 0; k < nb; ++k) {
        double weighted = 0.0;
        for (int c = 0; c < 3; ++c) {
            out.sh[i][k * 3 + c] += g_color[c] * basis[k];
            weighted += g_color[c] * p.sh[k * 3 + c];
        }
        g_dir += weighted * dbasis[k];
    }
    g_mean += (Eigen::Matrix3d::Identity() - dir * dir.transpose()) * g_dir / dist;
    out.mean[i] += g_mean;

    // Sigma = M M^T, M = R diag(s).
    const Eigen::Matrix3d G_M = 2.0 * G_sigma * M;
    Eigen::Matrix3d G_R;
    Eigen::Vector3d g_scale;
    for (int j = 0; j < 3; ++j) {
        G_R.col(j) = G_M.col(j) * p.scale[j];
        g_scale[j] = G_M.col(j).dot(R.col(j));
    }
    const Eigen::Vector4d g_q = rotation_matrix_vjp(p.rotation, G_R);
    const double rn = raw.raw_rotation.norm();
    if (rn >= 1e-12) {
        const Eigen::Vector4d q = raw.raw_rotation / rn;
        out.raw_rotation[i] += (g_q - q * q.dot(g_q)) / rn;
    }
    const double lo = std::log(kScaleMin);
    const double hi = std::log(kScaleMax);
    for (int a = 0; a < 3; ++a) {
        if (raw.raw_scale[a] > lo && raw.raw_scale[a] < hi) {
            out.raw_scale[i][a] += g_scale[a] * p.scale[a];
        }
    }
    out.raw_opacity[i] += sg[8] * p.opacity * (1.0 - p.opacity);
    (void)cfg;
}

} // namespace

GradientSet backward(const RawCloud& raw, const Camera& cam, const RenderConfig& cfg,
                     const Image& dL_dcolor) {
    cfg.validate();
    cam.intrinsics.validate();
    const int W = cam.intrinsics.width;
    const int H = cam.intrinsics.height;
    if (dL_dcolor.width() != W || dL_dcolor.height() != H || dL_dcolor.channels() != 3) {
        throw ValidationError("backward: dL_dcolor must be H x W x 3");
    }
    const GaussianCloud cloud = activate(raw);
    GradientSet out = GradientSet::zeros(cloud.size(), cloud.sh_degree);
    const Visible v = project_all(cloud, cam, cfg);
    const TileGrid grid = bin_tiles(v, cam, cfg);
    const int ts = cfg.tile_size;

    auto tile_pass = [&](std::size_t tile, auto&& sink) {
        const int tx = static_cast<int>(tile) % grid.tiles_x;
        const int ty = static_cast<int>(tile) / grid.tiles_x;
        const auto& list = grid.lists[tile];
        if (list.empty()) {
            return;
        }
        std::vector<Contribution> scratch;
        std::vector<ScreenGrad> local(list.size(), ScreenGrad{});
        bool any = false;
        for (int y = ty * ts; y < std::min(H, (ty + 1) * ts); ++y) {
            for (int x = tx * ts; x < std::min(W, (tx + 1) * ts); ++x) {
                const Eigen::Vector3d g(dL_dcolor.at(y, x, 0), dL_dcolor.at(y, x, 1),
                                        dL_dcolor.at(y, x, 2));
                if (g.isZero(0)) {
                    continue;
                }
                any = true;
                backward_pixel(list, v, x, y, cfg, g, scratch, local.data());
            }
        }
        if (any) {
            sink(list, local);
        }
    };

    std::vector<ScreenGrad> screen_grads(cloud.size(), ScreenGrad{});
    if (cfg.deterministic) {
        // Per-tile buffers, reduced in tile order: identical for any thread count.
        std::vector<std::vector<ScreenGrad>> per_tile(grid.lists.size());
        parallel_for(grid.lists.size(), cfg.threads, [&](std::size_t tile, int) {
            tile_pass(tile, [&](const auto&, std::vector<ScreenGrad>& local) {
                per_tile[tile] = std::move(local);
            });
        });
        for (std::size_t tile = 0; tile < grid.lists.size(); ++tile) {
            const auto& list = grid.lists[tile];
            for (std::size_t e = 0; e < per_tile[tile].size(); ++e) {
                for (int k = 0; k < 9; ++k) {
                    screen_grads[list[e]][k] += per_tile[tile][e][k];
                }
            }
        }
    } else {
        // Per-worker dense buffers, reduced in worker order.
        const int workers = resolve_threads(cfg.threads, grid.lists.size());
        std::vector<std::vector<ScreenGrad>> per_worker(
            workers, std::vector<ScreenGrad>(cloud.size(), ScreenGrad{}));
        parallel_for(grid.lists.size(), workers, [&](std::size_t tile, int worker) {
            tile_pass(tile, [&](const auto& list, std::vector<ScreenGrad>& local) {
                for (std::size_t e = 0; e < list.size(); ++e) {
                    for (int k = 0; k < 9; ++k) {
                        per_worker[worker][list[e]][k] += local[e][k];
                    }
                }
            });
        });
        for (const auto& buffer : per_worker) {
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                for (int k = 0; k < 9; ++k) {
                    screen_grads[i][k] += buffer[i][k];
                }
            }
        }
    }

    const int degree = effective_degree(cfg, cloud.sh_degree);
    parallel_for(cloud.size(), cfg.threads, [&](std::size_t i, int) {
        if (!v.screen[i]) {
            return;
        }
        const ScreenGrad& sg = screen_grads[i];
        if (std::all_of(sg.begin(), sg.end(), [](double d) { return d == 0.0; })) {
            return;
        }
        backward_primitive(raw.gaussians[i], cloud.primitives[i], degree, cam, cfg, *v.screen[i],
                           sg, out, i);
    });
    if (!out.all_finite()) {
        throw NumericalError("backward: non-finite gradient");
    }
    return out;
}

} // namespace vgd
