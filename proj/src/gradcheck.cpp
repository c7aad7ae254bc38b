// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/gradcheck.hpp"

#include "vgd/errors.hpp"
#include "vgd/losses.hpp"
#include "vgd/rasterizer.hpp"
#include "vgd/scene_harness.hpp"
#include "vgd/sh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace vgd {

void GradcheckConfig::validate() const {
    if (trials < 0) {
        throw ValidationError("gradcheck: trials must be >= 0");
    }
    if (size < 2 || max_gaussians < 1) {
        throw ValidationError("gradcheck: size must be >= 2 and max_gaussians >= 1");
    }
    if (!(render_step > 0.0) || !(loss_step > 0.0) || !(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw ValidationError("gradcheck: steps and tolerances must be positive");
    }
}

bool GradcheckReport::passed() const {
    return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.passed(); });
}

std::string GradcheckReport::to_text() const {
    std::string out = "# gradcheck seed=" + std::to_string(config.seed) +
                      " trials=" + std::to_string(config.trials) +
                      " size=" + std::to_string(config.size) +
                      " max_gaussians=" + std::to_string(config.max_gaussians) +
                      " rel_tol=" + harness::format_exact(config.rel_tol) +
                      " abs_tol=" + harness::format_exact(config.abs_tol) + "\n";
    out += "group\tchecked\tskipped\tfailures\tmax_abs_err\tmax_rel_err\tstatus\n";
    for (const auto& g : groups) {
        out += g.name + "\t" + std::to_string(g.checked) + "\t" + std::to_string(g.skipped) + "\t" +
               std::to_string(g.failures) + "\t" + harness::format_exact(g.max_abs_err) + "\t" +
               harness::format_exact(g.max_rel_err) + "\t" + (g.passed() ? "PASS" : "FAIL") + "\n";
    }
    out += std::string("result\t") + (passed() ? "PASS" : "FAIL") + "\n";
    return out;
}

namespace {

struct Checker {
    const GradcheckConfig& cfg;

    void compare(GradcheckGroup& g, double analytic, double numeric) const {
        const double abs_err = std::abs(analytic - numeric);
        ++g.checked;
        g.max_abs_err = std::max(g.max_abs_err, abs_err);
        const double scale = std::max(std::abs(analytic), std::abs(numeric));
        const double rel = scale > cfg.abs_tol ? abs_err / scale : 0.0;
        g.max_rel_err = std::max(g.max_rel_err, rel);
        if (!(abs_err < cfg.abs_tol || rel < cfg.rel_tol)) {
            ++g.failures;
        }
    }
};

double weighted_sum(const Image& a, const Image& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a.data()[i] * w.data()[i];
    }
    return s;
}

RawCloud random_cloud(std::mt19937_64& rng, const Camera& cam, int max_gaussians, int degree) {
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * std::generate_canonical<double, 64>(rng);
    };
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_gaussians));
    const auto& K = cam.intrinsics;
    std::vector<double> depths;
    while (static_cast<int>(depths.size()) < n) {
        const double z = uniform(2.0, 5.0);
        const bool clear = std::none_of(depths.begin(), depths.end(),
                                        [&](double d) { return std::abs(d - z) < 1e-3; });
        if (clear) {
            depths.push_back(z);
        }
    }
    RawCloud cloud;
    cloud.sh_degree = degree;
    const int basis = sh_basis_count(degree);
    for (double z : depths) {
        RawGaussian g;
        const double u = uniform(1.0, K.width - 1.0);
        const double v = uniform(1.0, K.height - 1.0);
        g.mean = {(u - K.cx) / K.fx * z, (v - K.cy) / K.fy * z, z};
        do {
            g.raw_rotation = {normal(rng), normal(rng), normal(rng), normal(rng)};
        } while (g.raw_rotation.norm() < 0.5);
        g.raw_scale = {std::log(uniform(0.15, 0.6)), std::log(uniform(0.15, 0.6)),
                       std::log(uniform(0.15, 0.6))};
        g.raw_opacity = uniform(-2.0, 2.0);
        g.sh.assign(3 * basis, 0.0);
        for (int c = 0; c < 3; ++c) {
            g.sh[c] = (uniform(0.3, 0.7) - 0.5) / kShC0;
        }
        for (int k = 1; k < basis; ++k) {
            for (int c = 0; c < 3; ++c) {
                g.sh[k * 3 + c] = uniform(-0.01, 0.01);
            }
        }
        cloud.gaussians.push_back(std::move(g));
    }
    return cloud;
}

void check_render(const GradcheckConfig& cfg, std::mt19937_64& rng, int trial,
                  std::vector<GradcheckGroup>& groups) {
    const Checker check{cfg};
    Camera cam;
    const double f = cfg.size;
    cam.intrinsics = {f, f, 0.5 * cfg.size, 0.5 * cfg.size, cfg.size, cfg.size};
    const int degree = trial % 4;
    RenderConfig rc;
    rc.sh_degree = degree;
    rc.alpha_min = 0.0;
    rc.transmittance_floor = 0.0;
    rc.cutoff_sigma = 0.0;
    rc.threads = cfg.threads;
    rc.deterministic = cfg.deterministic;
    rc.tile_size = 16;

    RawCloud cloud = random_cloud(rng, cam, cfg.max_gaussians, degree);
    std::uniform_real_distribution<double> wdist(-1.0, 1.0);
    Image weights(cfg.size, cfg.size, 3);
    for (double& v : weights.data()) {
        v = wdist(rng);
    }
    const GradientSet analytic = backward(cloud, cam, rc, weights);
    auto loss = [&]() { return weighted_sum(render(activate(cloud), cam, rc).color, weights); };
    const double h = cfg.render_step;
    auto central = [&](double& x) {
        const double x0 = x;
        x = x0 + h;
        const double lp = loss();
        x = x0 - h;
        const double lm = loss();
        x = x0;
        return (lp - lm) / (2.0 * h);
    };
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        RawGaussian& g = cloud.gaussians[i];
        for (int k = 0; k < 3; ++k) {
            check.compare(groups[0], analytic.mean[i][k], central(g.mean[k]));
        }
        for (int k = 0; k < 4; ++k) {
            check.compare(groups[1], analytic.raw_rotation[i][k], central(g.raw_rotation[k]));
        }
        for (int k = 0; k < 3; ++k) {
            check.compare(groups[2], analytic.raw_scale[i][k], central(g.raw_scale[k]));
        }
        check.compare(groups[3], analytic.raw_opacity[i], central(g.raw_opacity));
        for (std::size_t k = 0; k < g.sh.size(); ++k) {
            check.compare(groups[4], analytic.sh[i][k], central(g.sh[k]));
        }
    }
}

Image random_image(std::mt19937_64& rng, int size, int channels, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    Image img(size, size, channels);
    for (double& v : img.data()) {
        v = d(rng);
    }
    return img;
}

// Checks d f / d x entrywise; `skip(i)` marks entries at a kink.
void check_loss(const Checker& check, GradcheckGroup& group, Image x,
                const std::function<ValueAndGrad(const Image&)>& f,
                const std::function<bool(std::size_t)>& skip = {}) {
    const ValueAndGrad vg = f(x);
    const double h = check.cfg.loss_step;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (skip && skip(i)) {
            ++group.skipped;
            continue;
        }
        const double x0 = x.data()[i];
        x.data()[i] = x0 + h;
        const double lp = f(x).value;
        x.data()[i] = x0 - h;
        const double lm = f(x).value;
        x.data()[i] = x0;
        check.compare(group, vg.grad.data()[i], (lp - lm) / (2.0 * h));
    }
}

void check_losses(const GradcheckConfig& cfg, std::mt19937_64& rng,
                  std::vector<GradcheckGroup>& groups) {
    const Checker check{cfg};
    const int n = cfg.size;
    const int ns = std::max(cfg.size, kSsimWindow + 5);
    auto near_kink = [&](const Image& a, const Image& b) {
        return [pa = &a, pb = &b, m = cfg.kink_margin](std::size_t i) {
            return std::abs(pa->data()[i] - pb->data()[i]) < m;
        };
    };
    {
        const Image p = random_image(rng, n, 3, 0.05, 0.95);
        const Image t = random_image(rng, n, 3, 0.05, 0.95);
        check_loss(check, groups[5], p, [&](const Image& x) { return l1_loss_grad(x, t); },
                   near_kink(p, t));
        check_loss(check, groups[6], p, [&](const Image& x) { return smooth_l1_grad(x, t); });
    }
    {
        const Image p = random_image(rng, ns, 3, 0.05, 0.95);
        const Image t = random_image(rng, ns, 3, 0.05, 0.95);
        check_loss(check, groups[7], p, [&](const Image& x) { return ssim_grad(x, t); });
        check_loss(check, groups[8], p,
                   [&](const Image& x) { return photometric_loss_grad(x, t, 0.85); },
                   near_kink(p, t));
    }
    {
        const DepthMap teacher{random_image(rng, n, 1, 0.5, 5.0)};
        const Image p = random_image(rng, n, 1, 0.5, 5.0);
        check_loss(check, groups[9], p, [&](const Image& x) {
            return affine_invariant_loss_grad(DepthMap{x}, teacher);
        });
        check_loss(check, groups[10], p,
                   [&](const Image& x) { return distill_loss_grad(DepthMap{x}, teacher); });
    }
    {
        const Image guide = random_image(rng, n, 3, 0.0, 1.0);
        const Image d = random_image(rng, n, 1, 0.1, 1.0);
        check_loss(check, groups[11], d, [&](const Image& x) {
            return edge_aware_smoothness_grad(DisparityMap{x}, guide);
        });
    }
}

} // namespace

GradcheckReport run_gradcheck(const GradcheckConfig& cfg) {
    cfg.validate();
    GradcheckReport report;
    report.config = cfg;
    if (cfg.trials == 0) {
        return report;
    }
    for (const char* name : {"mean", "raw_rotation", "raw_scale", "raw_opacity", "sh", "loss.l1",
                             "loss.smooth_l1", "loss.ssim", "loss.photometric",
                             "loss.affine_invariant", "loss.distill", "loss.edge_aware_smoothness"}) {
        report.groups.push_back({name});
    }
    for (int trial = 0; trial < cfg.trials; ++trial) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(trial)};
        std::mt19937_64 rng(seq);
        check_render(cfg, rng, trial, report.groups);
        check_losses(cfg, rng, report.groups);
    }
    return report;
}

} // namespace vgd
