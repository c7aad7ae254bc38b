// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/scene_harness.hpp"

#include "vgd/errors.hpp"
#include "vgd/sh.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace vgd::harness {

namespace {

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

void require(bool ok, const char* what) {
    if (!ok) {
        throw ValidationError(what);
    }
}

} // namespace

void RigSpec::validate() const {
    require(cameras >= 1, "RigSpec: at least one camera");
    require(hfov_deg > 0.0 && hfov_deg < 180.0, "RigSpec: hfov must be in (0, 180) degrees");
    require(yaw_spacing_deg >= 0.0 && std::isfinite(yaw_spacing_deg), "RigSpec: bad yaw spacing");
    require(width >= 1 && height >= 1, "RigSpec: resolution must be positive");
    require(radius >= 0.0 && std::isfinite(radius) && std::isfinite(mount_height),
            "RigSpec: bad mounting geometry");
}

std::vector<Camera> make_rig(const RigSpec& spec) {
    spec.validate();
    const double f = 0.5 * spec.width / std::tan(0.5 * deg2rad(spec.hfov_deg));
    std::vector<Camera> out;
    for (int i = 0; i < spec.cameras; ++i) {
        const double yaw = deg2rad(spec.yaw_offset_deg + i * spec.yaw_spacing_deg);
        const Eigen::Vector3d z_c(std::cos(yaw), std::sin(yaw), 0.0);
        const Eigen::Vector3d x_c(std::sin(yaw), -std::cos(yaw), 0.0);
        const Eigen::Vector3d y_c(0.0, 0.0, -1.0);
        Eigen::Matrix3d R;
        R.col(0) = x_c;
        R.col(1) = y_c;
        R.col(2) = z_c;
        Camera cam;
        cam.id = i;
        cam.intrinsics = {f, f, 0.5 * spec.width, 0.5 * spec.height, spec.width, spec.height};
        cam.pose.rotation = Eigen::Quaterniond(R).normalized();
        cam.pose.translation = spec.radius * z_c + Eigen::Vector3d(0.0, 0.0, spec.mount_height);
        out.push_back(cam);
    }
    return out;
}

double pairwise_overlap(const RigSpec& spec) {
    spec.validate();
    return std::max(0.0, spec.hfov_deg - spec.yaw_spacing_deg) / spec.hfov_deg;
}

std::vector<Camera> translate_rig(const std::vector<Camera>& cameras, const Eigen::Vector3d& offset) {
    std::vector<Camera> out = cameras;
    for (auto& c : out) {
        c.pose.translation += offset;
    }
    return out;
}

void SceneSpec::validate() const {
    require(count >= 1, "SceneSpec: count must be >= 1");
    require(layout == "box" || layout == "corridor", "SceneSpec: layout must be box or corridor");
    require(sh_degree >= 0 && sh_degree <= 3, "SceneSpec: sh_degree must be in [0, 3]");
    require(radius_min > 0.0 && radius_min <= radius_max, "SceneSpec: bad radius range");
    require(z_min <= z_max, "SceneSpec: bad height range");
    require(scale_min >= kScaleMin && scale_min <= scale_max && scale_max <= kScaleMax,
            "SceneSpec: scale range must lie inside [s_min, s_max]");
    require(opacity_min > 0.0 && opacity_min <= opacity_max && opacity_max < 1.0,
            "SceneSpec: opacity range must lie inside (0, 1)");
    require(color_min >= 0.0 && color_min <= color_max && color_max <= 1.0,
            "SceneSpec: color range must lie inside [0, 1]");
    require(sh_detail >= 0.0, "SceneSpec: sh_detail must be >= 0");
}

GaussianCloud make_scene(const SceneSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * std::generate_canonical<double, 64>(rng);
    };
    std::normal_distribution<double> normal(0.0, 1.0);

    GaussianCloud cloud;
    cloud.sh_degree = spec.sh_degree;
    const int basis = sh_basis_count(spec.sh_degree);
    for (int i = 0; i < spec.count; ++i) {
        GaussianPrimitive g;
        if (spec.layout == "box") {
            const double theta = uniform(0.0, 2.0 * std::numbers::pi);
            // Uniform over the annulus area.
            const double r = std::sqrt(uniform(spec.radius_min * spec.radius_min,
                                               spec.radius_max * spec.radius_max));
            g.mean = {r * std::cos(theta), r * std::sin(theta), uniform(spec.z_min, spec.z_max)};
        } else {
            // Two facades along x with a ground strip between them.
            const double x = uniform(-spec.radius_max, spec.radius_max);
            const double side = uniform(0.0, 1.0);
            if (side < 0.4) {
                g.mean = {x, uniform(spec.radius_min, spec.radius_min + 1.0), uniform(spec.z_min, spec.z_max)};
            } else if (side < 0.8) {
                g.mean = {x, -uniform(spec.radius_min, spec.radius_min + 1.0), uniform(spec.z_min, spec.z_max)};
            } else {
                g.mean = {x, uniform(-spec.radius_min, spec.radius_min), spec.z_min};
            }
        }
        Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
        g.rotation = normalize_quaternion(q);
        const double lmin = std::log(spec.scale_min);
        const double lmax = std::log(spec.scale_max);
        g.scale = {std::exp(uniform(lmin, lmax)), std::exp(uniform(lmin, lmax)),
                   std::exp(uniform(lmin, lmax))};
        g.opacity = uniform(spec.opacity_min, spec.opacity_max);
        g.sh.assign(3 * basis, 0.0);
        for (int c = 0; c < 3; ++c) {
            g.sh[c] = (uniform(spec.color_min, spec.color_max) - 0.5) / kShC0;
        }
        for (int k = 1; k < basis; ++k) {
            for (int c = 0; c < 3; ++c) {
                g.sh[k * 3 + c] = uniform(-spec.sh_detail, spec.sh_detail);
            }
        }
        cloud.primitives.push_back(std::move(g));
    }
    cloud.validate();
    return cloud;
}

namespace {

void apply_noise(DepthMap& depth, double noise_std, std::uint64_t seed) {
    if (noise_std == 0.0) {
        return;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : depth.values.data()) {
        v *= std::exp(noise_std * normal(rng));
    }
}

void floor_depth(DepthMap& depth, double z_near) {
    for (double& v : depth.values.data()) {
        v = std::max(v, z_near);
    }
}

} // namespace

DepthMap teacher_depth(const GaussianCloud& cloud, const Camera& camera, double noise_std,
                       std::uint64_t seed, const RenderConfig& cfg) {
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw ValidationError("teacher_depth: noise_std must be finite and >= 0");
    }
    const RenderedImage r = render(cloud, camera, cfg);
    DepthMap out{r.depth};
    apply_noise(out, noise_std, seed);
    floor_depth(out, cfg.z_near);
    return out;
}

DepthMap completed_depth(const GaussianCloud& cloud, const Camera& camera, double noise_std,
                         double fill, std::uint64_t seed, const RenderConfig& cfg,
                         double min_alpha) {
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw ValidationError("completed_depth: noise_std must be finite and >= 0");
    }
    if (!(fill > 0.0)) {
        throw ValidationError("completed_depth: fill depth must be positive");
    }
    const RenderedImage r = render(cloud, camera, cfg);
    DepthMap out{r.depth};
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double a = r.accum_alpha.data()[i];
        out.values.data()[i] = a >= min_alpha ? r.depth.data()[i] / a : fill;
    }
    apply_noise(out, noise_std, seed);
    floor_depth(out, cfg.z_near);
    return out;
}

RawParamMap initial_params(const DepthMap& depth, const CameraIntrinsics& K, int sh_degree,
                           const InitSpec& spec) {
    if (!(spec.opacity > 0.0 && spec.opacity < 1.0) || !(spec.footprint > 0.0)) {
        throw ValidationError("InitSpec: opacity must be in (0, 1), footprint > 0");
    }
    RawParamMap raw(depth.width(), depth.height(), sh_degree);
    const double raw_opacity = logit(spec.opacity);
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            auto px = raw.pixel(y, x);
            px[kRawRotation] = 1.0;
            px[kRawOpacity] = raw_opacity;
            const double s = std::clamp(spec.footprint * depth.at(y, x) / K.fx, kScaleMin, kScaleMax);
            for (int a = 0; a < 3; ++a) {
                px[kRawScale + a] = std::log(s);
            }
        }
    }
    return raw;
}

std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string MetricTable::to_tsv() const {
    const bool with_lpips = !rows.empty() && rows.front().lpips.has_value();
    std::string out = with_lpips ? "view\tpsnr\tssim\tlpips\n" : "view\tpsnr\tssim\n";
    for (const auto& r : rows) {
        out += r.name + "\t" + format_exact(r.psnr) + "\t" + format_exact(r.ssim);
        if (with_lpips) {
            out += "\t" + format_exact(r.lpips.value_or(std::nan("")));
        }
        out += "\n";
    }
    return out;
}

MetricTable MetricTable::from_tsv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("view\tpsnr\tssim", 0) != 0) {
        throw ValidationError("metric table: missing header");
    }
    const bool with_lpips = line == "view\tpsnr\tssim\tlpips";
    MetricTable t;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        MetricRow r;
        std::string psnr, ssim_s, lpips;
        if (!std::getline(row, r.name, '\t') || !std::getline(row, psnr, '\t') ||
            !std::getline(row, ssim_s, '\t') || (with_lpips && !std::getline(row, lpips, '\t'))) {
            throw ValidationError("metric table: line " + std::to_string(lineno) + ": too few fields");
        }
        try {
            r.psnr = std::stod(psnr);
            r.ssim = std::stod(ssim_s);
            if (with_lpips) {
                r.lpips = std::stod(lpips);
            }
        } catch (const std::exception&) {
            throw ValidationError("metric table: line " + std::to_string(lineno) + ": bad number");
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

MetricTable evaluate(const std::vector<Image>& pred, const std::vector<Image>& gt,
                     const std::vector<std::string>& names, const PerceptualMetric& perceptual) {
    if (pred.size() != gt.size()) {
        throw ValidationError("evaluate: " + std::to_string(pred.size()) + " predictions vs " +
                              std::to_string(gt.size()) + " ground-truth views");
    }
    if (pred.empty()) {
        throw ValidationError("evaluate: no views");
    }
    if (!names.empty() && names.size() != pred.size()) {
        throw ValidationError("evaluate: one name per view required");
    }
    MetricTable t;
    MetricRow mean{"mean", 0.0, 0.0, std::nullopt};
    double lpips_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        require_same_shape(pred[i], gt[i], "evaluate");
        MetricRow r;
        r.name = names.empty() ? "view_" + std::to_string(i) : names[i];
        r.psnr = psnr(pred[i], gt[i]);
        r.ssim = ssim(pred[i], gt[i]);
        if (perceptual) {
            r.lpips = perceptual(pred[i], gt[i]);
            lpips_sum += *r.lpips;
        }
        mean.psnr += r.psnr;
        mean.ssim += r.ssim;
        t.rows.push_back(std::move(r));
    }
    const double n = static_cast<double>(pred.size());
    mean.psnr /= n;
    mean.ssim /= n;
    if (perceptual) {
        mean.lpips = lpips_sum / n;
    }
    t.rows.push_back(std::move(mean));
    return t;
}

std::vector<Image> render_views(const GaussianCloud& cloud, const std::vector<Camera>& cameras,
                                const RenderConfig& cfg, bool oracle) {
    std::vector<Image> out;
    for (const auto& c : cameras) {
        out.push_back(oracle ? render_bruteforce(cloud, c, cfg).color : render(cloud, c, cfg).color);
    }
    return out;
}

} // namespace vgd::harness
