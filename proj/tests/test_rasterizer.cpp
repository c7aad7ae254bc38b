// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/errors.hpp"
#include "vgd/rasterizer.hpp"
#include "vgd/sh.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vgd {
namespace {

using test::uniform;

Camera square_camera(int size, double f) {
    Camera cam;
    cam.intrinsics = {f, f, 0.5 * size, 0.5 * size, size, size};
    return cam;
}

GaussianPrimitive colored(const Eigen::Vector3d& mean, double scale, double opacity,
                          const Eigen::Vector3d& rgb) {
    GaussianPrimitive p;
    p.mean = mean;
    p.scale = Eigen::Vector3d::Constant(scale);
    p.opacity = opacity;
    p.sh = {(rgb[0] - 0.5) / kShC0, (rgb[1] - 0.5) / kShC0, (rgb[2] - 0.5) / kShC0};
    return p;
}

RenderConfig no_cutoffs() {
    RenderConfig cfg;
    cfg.sh_degree = 0;
    cfg.alpha_min = 0.0;
    cfg.transmittance_floor = 0.0;
    cfg.cutoff_sigma = 0.0;
    return cfg;
}

GaussianCloud random_cloud(std::mt19937_64& rng, int count, int sh_degree, const Camera& cam) {
    GaussianCloud c;
    c.sh_degree = sh_degree;
    const auto& K = cam.intrinsics;
    for (int i = 0; i < count; ++i) {
        const double z = uniform(rng, 1.0, 20.0);
        const Eigen::Vector2d px(uniform(rng, -0.1, 1.1) * K.width, uniform(rng, -0.1, 1.1) * K.height);
        GaussianPrimitive p;
        p.mean = unproject(px, z, K, cam.pose);
        p.rotation = test::random_unit_quaternion(rng);
        p.scale = {uniform(rng, 0.02, 0.5), uniform(rng, 0.02, 0.5), uniform(rng, 0.02, 0.5)};
        p.opacity = uniform(rng, 0.05, 0.95);
        p.sh.resize(3 * sh_basis_count(sh_degree));
        for (double& v : p.sh) v = uniform(rng, -0.6, 0.6);
        c.primitives.push_back(p);
    }
    return c;
}

TEST(RenderConfig, Validation) {
    RenderConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.tile_size = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.alpha_min = 1.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.transmittance_floor = -0.1;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Render, EmptyCloudIsBackground) {
    RenderConfig cfg;
    cfg.background = {0.2, 0.4, 0.6};
    const Camera cam = square_camera(20, 10.0);
    for (const auto& img : {render({}, cam, cfg), render_bruteforce({}, cam, cfg)}) {
        for (int y = 0; y < 20; ++y) {
            for (int x = 0; x < 20; ++x) {
                EXPECT_EQ(img.color.at(y, x, 0), 0.2);
                EXPECT_EQ(img.color.at(y, x, 1), 0.4);
                EXPECT_EQ(img.color.at(y, x, 2), 0.6);
                EXPECT_EQ(img.accum_alpha.at(y, x), 0.0);
                EXPECT_EQ(img.depth.at(y, x), 0.0);
            }
        }
    }
}

TEST(Render, SingleGaussianClosedForm) {
    const Camera cam = square_camera(9, 9.0);
    RenderConfig cfg;
    cfg.sh_degree = 0;
    cfg.background = {0.1, 0.3, 0.9};
    const Eigen::Vector3d c1(0.8, 0.2, 0.55);
    const double o1 = 0.7;
    GaussianCloud cloud;
    cloud.sh_degree = 0;
    cloud.primitives.push_back(colored({0, 0, 3}, 0.2, o1, c1));
    for (const auto& img : {render(cloud, cam, cfg), render_bruteforce(cloud, cam, cfg)}) {
        for (int ch = 0; ch < 3; ++ch) {
            const double color = kShC0 * cloud.primitives[0].sh[ch] + 0.5;
            EXPECT_NEAR(img.color.at(4, 4, ch), color * o1 + cfg.background[ch] * (1 - o1), 1e-12);
        }
        EXPECT_NEAR(img.accum_alpha.at(4, 4), o1, 1e-12);
        EXPECT_NEAR(img.depth.at(4, 4), 3.0 * o1, 1e-12);
    }
}

TEST(Render, TwoCoincidentGaussiansClosedForm) {
    const Camera cam = square_camera(9, 9.0);
    RenderConfig cfg;
    cfg.sh_degree = 0;
    cfg.background = {0.25, 0.5, 1.0};
    const Eigen::Vector3d c1(0.9, 0.1, 0.4), c2(0.2, 0.7, 0.6);
    GaussianCloud cloud;
    cloud.sh_degree = 0;
    // Stored back to front so sorting is exercised.
    cloud.primitives.push_back(colored({0, 0, 2}, 0.3, 0.5, c2));
    cloud.primitives.push_back(colored({0, 0, 1}, 0.15, 0.5, c1));
    for (const auto& img : {render(cloud, cam, cfg), render_bruteforce(cloud, cam, cfg)}) {
        for (int ch = 0; ch < 3; ++ch) {
            const double a = kShC0 * cloud.primitives[1].sh[ch] + 0.5;
            const double b = kShC0 * cloud.primitives[0].sh[ch] + 0.5;
            EXPECT_NEAR(img.color.at(4, 4, ch), 0.5 * a + 0.25 * b + 0.25 * cfg.background[ch], 1e-12);
        }
        EXPECT_NEAR(img.accum_alpha.at(4, 4), 0.75, 1e-12);
    }
}

TEST(Render, EqualDepthTieBreaksByIndex) {
    const Camera cam = square_camera(9, 9.0);
    RenderConfig cfg;
    cfg.sh_degree = 0;
    GaussianCloud cloud;
    cloud.sh_degree = 0;
    cloud.primitives.push_back(colored({0, 0, 2}, 0.3, 0.5, {1, 0, 0}));
    cloud.primitives.push_back(colored({0, 0, 2}, 0.3, 0.5, {0, 1, 0}));
    const RenderedImage img = render(cloud, cam, cfg);
    EXPECT_NEAR(img.color.at(4, 4, 0), 0.5, 1e-12);
    EXPECT_NEAR(img.color.at(4, 4, 1), 0.25, 1e-12);
}

TEST(ProjectGaussian, OnAxisIsotropic) {
    const Camera cam = square_camera(64, 50.0);
    RenderConfig cfg;
    cfg.sh_degree = 0;
    const auto sg = project_gaussian(colored({0, 0, 4}, 0.3, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg);
    ASSERT_TRUE(sg.has_value());
    const double expect = std::pow(50.0 * 0.3 / 4.0, 2) + cfg.low_pass;
    EXPECT_NEAR(sg->cov2d(0, 0), expect, 1e-9);
    EXPECT_NEAR(sg->cov2d(1, 1), expect, 1e-9);
    EXPECT_NEAR(sg->cov2d(0, 1), 0.0, 1e-9);
    EXPECT_NEAR(sg->cov2d(0, 1), sg->cov2d(1, 0), 1e-12);
    EXPECT_NEAR((sg->mean2d - Eigen::Vector2d(32, 32)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((sg->conic * sg->cov2d - Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-12);
    EXPECT_EQ(sg->depth, 4.0);
}

TEST(ProjectGaussian, DoublingDepthHalvesStdDev) {
    const Camera cam = square_camera(64, 100.0);
    RenderConfig cfg;
    for (double d : {2.0, 5.0, 10.0}) {
        const auto a = project_gaussian(colored({0, 0, d}, 0.5, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg);
        const auto b = project_gaussian(colored({0, 0, 2 * d}, 0.5, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg);
        ASSERT_TRUE(a && b);
        EXPECT_NEAR(std::sqrt(b->cov2d(0, 0)) / std::sqrt(a->cov2d(0, 0)), 0.5, 0.01);
    }
}

TEST(ProjectGaussian, CovarianceMatchesNumericalJacobian) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Camera cam;
        cam.intrinsics = {uniform(rng, 20, 80), uniform(rng, 20, 80), uniform(rng, 10, 30),
                          uniform(rng, 10, 30), 40, 40};
        cam.pose = test::random_pose(rng);
        const auto& K = cam.intrinsics;
        const double z = uniform(rng, 1, 10);
        const Eigen::Vector2d px(uniform(rng, 2, 38), uniform(rng, 2, 38));
        GaussianPrimitive p = colored(unproject(px, z, K, cam.pose), 0.1, 0.5, {0.5, 0.5, 0.5});
        p.rotation = test::random_unit_quaternion(rng);
        p.scale = {uniform(rng, 0.05, 0.5), uniform(rng, 0.05, 0.5), uniform(rng, 0.05, 0.5)};
        RenderConfig cfg;
        cfg.sh_degree = 0;
        const auto sg = project_gaussian(p, 0, cam, cfg);
        ASSERT_TRUE(sg);

        // Central differences of the world-to-pixel map at the mean.
        auto pixel_of = [&](const Eigen::Vector3d& w) {
            const Eigen::Vector3d c = cam.to_camera(w);
            return Eigen::Vector2d(K.fx * c.x() / c.z() + K.cx, K.fy * c.y() / c.z() + K.cy);
        };
        Eigen::Matrix<double, 2, 3> Jw;
        const double h = 1e-6;
        for (int a = 0; a < 3; ++a) {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e[a] = h;
            Jw.col(a) = (pixel_of(p.mean + e) - pixel_of(p.mean - e)) / (2 * h);
        }
        const Eigen::Matrix2d want =
            Jw * covariance(p.rotation, p.scale) * Jw.transpose() + cfg.low_pass * Eigen::Matrix2d::Identity();
        const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
        EXPECT_LT((sg->cov2d - want).cwiseAbs().maxCoeff() / scale, 1e-5) << "trial " << trial;
    }
}

TEST(ProjectGaussian, CullsBehindNearPlaneAndOutside) {
    const Camera cam = square_camera(32, 32.0);
    RenderConfig cfg;
    cfg.sh_degree = 0;
    EXPECT_FALSE(project_gaussian(colored({0, 0, 0.04}, 0.01, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg));
    EXPECT_FALSE(project_gaussian(colored({0, 0, -3}, 0.5, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg));
    EXPECT_FALSE(project_gaussian(colored({0, 0, 600}, 0.5, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg));
    EXPECT_FALSE(project_gaussian(colored({50, 0, 5}, 0.05, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg));
    EXPECT_TRUE(project_gaussian(colored({0, 0, 5}, 0.05, 0.5, {0.5, 0.5, 0.5}), 0, cam, cfg));
}

TEST(Render, TiledMatchesBruteForce) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        Camera cam = square_camera(48, 40.0);
        cam.pose = test::random_pose(rng);
        const GaussianCloud cloud = random_cloud(rng, 1 + trial * 40, trial % 4, cam);
        RenderConfig cfg;
        cfg.sh_degree = trial % 4;
        cfg.tile_size = 1 + trial % 17;
        cfg.background = {0.1, 0.2, 0.3};
        const auto a = render(cloud, cam, cfg);
        const auto b = render_bruteforce(cloud, cam, cfg);
        EXPECT_LT(test::max_abs_diff(a.color, b.color), 1e-5);
        const RenderConfig exact = [&] {
            RenderConfig c = cfg;
            c.alpha_min = c.transmittance_floor = c.cutoff_sigma = 0.0;
            return c;
        }();
        EXPECT_LT(test::max_abs_diff(render(cloud, cam, exact).color,
                                     render_bruteforce(cloud, cam, exact).color), 1e-6);
    }
}

TEST(Render, AccumAlphaInUnitInterval) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        Camera cam = square_camera(32, 30.0);
        const GaussianCloud cloud = random_cloud(rng, 300, 1, cam);
        for (const RenderConfig& cfg : {RenderConfig{}, no_cutoffs()}) {
            const auto img = render(cloud, cam, cfg);
            for (double v : img.accum_alpha.data()) {
                ASSERT_GE(v, 0.0);
                ASSERT_LE(v, 1.0);
            }
            for (double v : img.color.data()) {
                ASSERT_TRUE(std::isfinite(v));
            }
        }
    }
}

TEST(Render, BitIdenticalAcrossThreadCounts) {
    std::mt19937_64 rng(13);
    Camera cam = square_camera(64, 50.0);
    const GaussianCloud cloud = random_cloud(rng, 500, 2, cam);
    RenderConfig cfg;
    cfg.sh_degree = 2;
    cfg.threads = 1;
    const auto ref = render(cloud, cam, cfg);
    for (int t : {2, 3, 8}) {
        cfg.threads = t;
        const auto img = render(cloud, cam, cfg);
        EXPECT_TRUE(img.color == ref.color) << t << " threads";
        EXPECT_TRUE(img.accum_alpha == ref.accum_alpha);
        EXPECT_TRUE(img.depth == ref.depth);
    }
}

TEST(Render, PermutationInvariantWithDistinctDepths) {
    std::mt19937_64 rng(14);
    Camera cam = square_camera(32, 30.0);
    GaussianCloud cloud = random_cloud(rng, 200, 1, cam);
    RenderConfig cfg;
    const auto ref = render(cloud, cam, cfg);
    std::shuffle(cloud.primitives.begin(), cloud.primitives.end(), rng);
    const auto img = render(cloud, cam, cfg);
    EXPECT_TRUE(img.color == ref.color);
    EXPECT_TRUE(img.accum_alpha == ref.accum_alpha);
}

TEST(Render, OwnContributionMonotoneInOpacity) {
    std::mt19937_64 rng(15);
    const Camera cam = square_camera(9, 9.0);
    RenderConfig cfg;
    cfg.sh_degree = 0;
    GaussianCloud cloud = random_cloud(rng, 10, 0, cam);
    cloud.primitives.push_back(colored({0, 0, 6}, 0.4, 0.1, {0.9, 0.8, 0.7}));
    const std::size_t k = cloud.size() - 1;
    double previous = -1.0;
    for (double o = 0.01; o < 1.0; o += 0.01) {
        cloud.primitives[k].opacity = o;
        for (double& v : cloud.primitives[k].sh) v = (0.9 - 0.5) / kShC0;
        const double with = render_bruteforce(cloud, cam, cfg).color.at(4, 4, 0);
        for (double& v : cloud.primitives[k].sh) v = -0.5 / kShC0;
        const double dark = render_bruteforce(cloud, cam, cfg).color.at(4, 4, 0);
        const double own = with - dark;
        EXPECT_GE(own, previous - 1e-15) << "opacity " << o;
        previous = own;
    }
    EXPECT_GT(previous, 0.0);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    std::mt19937_64 rng(16);
    Camera cam = square_camera(16, 16.0);
    const GaussianCloud cloud = random_cloud(rng, 30, 1, cam);
    RenderConfig cfg;
    const GradientSet g = backward(to_raw(cloud), cam, cfg, Image(16, 16, 3, 0.0));
    EXPECT_EQ(g.size(), cloud.size());
    EXPECT_TRUE(g.all_zero());
}

TEST(Backward, CulledAndDistantGaussiansGetZeroGradient) {
    const Camera cam = square_camera(32, 32.0);
    RenderConfig cfg;
    cfg.sh_degree = 0;
    GaussianCloud cloud;
    cloud.sh_degree = 0;
    cloud.primitives.push_back(colored({-0.7, -0.7, 2}, 0.05, 0.8, {0.9, 0.1, 0.1})); // top-left
    cloud.primitives.push_back(colored({0, 0, -2}, 0.2, 0.8, {0.9, 0.1, 0.1}));       // behind
    cloud.primitives.push_back(colored({0.7, 0.7, 2}, 0.05, 0.8, {0.1, 0.9, 0.1}));   // bottom-right
    Image dL(32, 32, 3, 0.0);
    for (int y = 24; y < 32; ++y) {
        for (int x = 24; x < 32; ++x) {
            for (int c = 0; c < 3; ++c) dL.at(y, x, c) = 1.0;
        }
    }
    const GradientSet g = backward(to_raw(cloud), cam, cfg, dL);
    ASSERT_TRUE(g.all_finite());
    for (std::size_t i : {0u, 1u}) {
        EXPECT_EQ(g.mean[i].norm(), 0.0);
        EXPECT_EQ(g.raw_scale[i].norm(), 0.0);
        EXPECT_EQ(g.raw_rotation[i].norm(), 0.0);
        EXPECT_EQ(g.raw_opacity[i], 0.0);
        for (double v : g.sh[i]) EXPECT_EQ(v, 0.0);
    }
    EXPECT_GT(std::abs(g.raw_opacity[2]), 0.0);
}

TEST(Backward, ThreadedAccumulationAgrees) {
    std::mt19937_64 rng(17);
    Camera cam = square_camera(48, 40.0);
    const GaussianCloud cloud = random_cloud(rng, 400, 1, cam);
    const Image dL = test::random_image(rng, 48, 48, 3, -1.0, 1.0);
    RenderConfig cfg;
    cfg.tile_size = 8;
    cfg.threads = 1;
    const GradientSet ref = backward(to_raw(cloud), cam, cfg, dL);
    for (int t : {2, 8}) {
        cfg.threads = t;
        cfg.deterministic = true;
        const GradientSet det = backward(to_raw(cloud), cam, cfg, dL);
        cfg.deterministic = false;
        const GradientSet fast = backward(to_raw(cloud), cam, cfg, dL);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            EXPECT_EQ(det.mean[i], ref.mean[i]);
            EXPECT_EQ(det.raw_opacity[i], ref.raw_opacity[i]);
            EXPECT_EQ(det.sh[i], ref.sh[i]);
            const double tol = 1e-6 * std::max(1e-6, ref.mean[i].norm());
            EXPECT_LE((fast.mean[i] - ref.mean[i]).norm(), tol);
            EXPECT_LE((fast.raw_scale[i] - ref.raw_scale[i]).norm(),
                      1e-6 * std::max(1e-6, ref.raw_scale[i].norm()));
        }
    }
}

TEST(Backward, MatchesFiniteDifferencesOnSmallScene) {
    std::mt19937_64 rng(18);
    const Camera cam = square_camera(8, 8.0);
    GaussianCloud cloud;
    cloud.sh_degree = 1;
    for (int i = 0; i < 4; ++i) {
        GaussianPrimitive p;
        p.mean = unproject({uniform(rng, 2, 6), uniform(rng, 2, 6)}, 2.0 + i * 0.7, cam.intrinsics, cam.pose);
        p.rotation = test::random_unit_quaternion(rng);
        p.scale = {uniform(rng, 0.2, 0.5), uniform(rng, 0.2, 0.5), uniform(rng, 0.2, 0.5)};
        p.opacity = uniform(rng, 0.3, 0.8);
        p.sh.assign(12, 0.0);
        for (int c = 0; c < 3; ++c) p.sh[c] = uniform(rng, -0.5, 0.5);
        for (int k = 3; k < 12; ++k) p.sh[k] = uniform(rng, -0.01, 0.01);
        cloud.primitives.push_back(p);
    }
    RawCloud raw = to_raw(cloud);
    const RenderConfig cfg = [] {
        RenderConfig c = no_cutoffs();
        c.sh_degree = 1;
        return c;
    }();
    const Image W = test::random_image(rng, 8, 8, 3, -1.0, 1.0);
    auto loss = [&](const RawCloud& r) {
        const Image& img = render(activate(r), cam, cfg).color;
        double s = 0.0;
        for (std::size_t i = 0; i < img.size(); ++i) s += W.data()[i] * img.data()[i];
        return s;
    };
    const GradientSet g = backward(raw, cam, cfg, W);
    const double h = 1e-5;
    auto check = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double lp = loss(raw);
        param = saved - h;
        const double lm = loss(raw);
        param = saved;
        const double fd = (lp - lm) / (2 * h);
        const double err = std::abs(fd - analytic);
        EXPECT_TRUE(err < 1e-6 || err / std::max(std::abs(fd), std::abs(analytic)) < 1e-3)
            << "fd " << fd << " analytic " << analytic;
    };
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (int a = 0; a < 3; ++a) check(raw.gaussians[i].mean[a], g.mean[i][a]);
        for (int a = 0; a < 4; ++a) check(raw.gaussians[i].raw_rotation[a], g.raw_rotation[i][a]);
        for (int a = 0; a < 3; ++a) check(raw.gaussians[i].raw_scale[a], g.raw_scale[i][a]);
        check(raw.gaussians[i].raw_opacity, g.raw_opacity[i]);
        for (int k = 0; k < 12; ++k) check(raw.gaussians[i].sh[k], g.sh[i][k]);
    }
}

TEST(Render, RejectsNonFiniteInput) {
    const Camera cam = square_camera(8, 8.0);
    GaussianCloud cloud;
    cloud.sh_degree = 0;
    cloud.primitives.push_back(colored({0, 0, 2}, 0.3, 0.5, {0.5, 0.5, 0.5}));
    cloud.primitives[0].mean.x() = std::nan("");
    EXPECT_ANY_THROW(render(cloud, cam, RenderConfig{}));
}

} // namespace
} // namespace vgd
