// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/errors.hpp"
#include "vgd/geometry.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace vgd {
namespace {

using test::uniform;

const CameraIntrinsics kK{500.0, 480.0, 320.0, 240.0, 640, 480};

TEST(Intrinsics, ValidateRejectsBadValues) {
    EXPECT_NO_THROW(kK.validate());
    EXPECT_THROW((CameraIntrinsics{0.0, 1.0, 1.0, 1.0, 4, 4}.validate()), ValidationError);
    EXPECT_THROW((CameraIntrinsics{1.0, -1.0, 1.0, 1.0, 4, 4}.validate()), ValidationError);
    EXPECT_THROW((CameraIntrinsics{1.0, 1.0, 0.0, 1.0, 4, 4}.validate()), ValidationError);
    EXPECT_THROW((CameraIntrinsics{1.0, 1.0, 1.0, 4.0, 4, 4}.validate()), ValidationError);
}

TEST(DisparityToDepth, Examples) {
    EXPECT_DOUBLE_EQ(disparity_to_depth(500.0, 500.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(disparity_to_depth(250.0, 500.0, 1.0), 2.0);
}

TEST(DisparityToDepth, ClampsTinyDisparityAndRejectsNan) {
    DisparityMap d = make_disparity_map(2, 1, 0.0);
    d.at(0, 1) = -3.0;
    const DepthMap z = disparity_to_depth(d, 2.0, 1.5);
    EXPECT_DOUBLE_EQ(z.at(0, 0), 2.0 * 1.5 / kDisparityFloor);
    EXPECT_DOUBLE_EQ(z.at(0, 1), 2.0 * 1.5 / kDisparityFloor);
    d.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(disparity_to_depth(d, 2.0), ValidationError);
    EXPECT_THROW(disparity_to_depth(make_disparity_map(1, 1, 1.0), 0.0), ValidationError);
}

TEST(DisparityToDepth, RoundTrip) {
    std::mt19937_64 rng(1);
    DepthMap z = make_depth_map(16, 8, 1.0);
    for (double& v : z.values.data()) {
        v = uniform(rng, 0.1, 100.0);
    }
    const DepthMap back = disparity_to_depth(depth_to_disparity(z, 321.0, 0.7), 321.0, 0.7);
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        EXPECT_NEAR(back.values.data()[i], z.values.data()[i], 1e-9);
    }
}

TEST(DisparityToDepth, StrictlyDecreasing) {
    double prev = std::numeric_limits<double>::infinity();
    for (double d = 1e-5; d < 1e4; d *= 1.37) {
        const double z = disparity_to_depth(d, 400.0, 1.0);
        EXPECT_LT(z, prev);
        prev = z;
    }
}

TEST(Unproject, PrincipalAnd45DegreeRays) {
    const Eigen::Vector3d a = unproject({kK.cx, kK.cy}, 5.0, kK, Pose::identity());
    EXPECT_NEAR((a - Eigen::Vector3d(0, 0, 5)).norm(), 0.0, 1e-12);
    const CameraIntrinsics K{2.0, 2.0, 1.0, 1.0, 4, 4};
    const Eigen::Vector3d b = unproject({K.cx + K.fx, K.cy}, 2.0, K, Pose::identity());
    EXPECT_NEAR((b - Eigen::Vector3d(2, 0, 2)).norm(), 0.0, 1e-12);
}

TEST(Unproject, RejectsNonPositiveDepth) {
    EXPECT_THROW(unproject({1, 1}, 0.0, kK, Pose::identity()), ValidationError);
    EXPECT_THROW(unproject({1, 1}, -1.0, kK, Pose::identity()), ValidationError);
}

TEST(Project, Examples) {
    const auto p = project({0, 0, 5}, kK, Pose::identity());
    ASSERT_TRUE(p);
    EXPECT_NEAR(p->pixel.x(), kK.cx, 1e-12);
    EXPECT_NEAR(p->pixel.y(), kK.cy, 1e-12);
    EXPECT_DOUBLE_EQ(p->depth, 5.0);
    Pose back;
    back.translation = {0, 0, -1};
    const auto q = project({0, 0, 5}, kK, back);
    ASSERT_TRUE(q);
    EXPECT_DOUBLE_EQ(q->depth, 6.0);
}

TEST(Project, CullsAtNearPlane) {
    EXPECT_FALSE(project({0, 0, kDefaultNear}, kK, Pose::identity()));
    EXPECT_FALSE(project({0, 0, -2}, kK, Pose::identity()));
    EXPECT_TRUE(project({0, 0, 2 * kDefaultNear}, kK, Pose::identity()));
}

TEST(Project, InvertsUnprojectOnRandomSamples) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Pose T = test::random_pose(rng);
        const Eigen::Vector2d px(uniform(rng, 0, kK.width), uniform(rng, 0, kK.height));
        const double d = std::exp(uniform(rng, std::log(0.1), std::log(1000.0)));
        const auto p = project(unproject(px, d, kK, T), kK, T);
        ASSERT_TRUE(p);
        EXPECT_NEAR(p->pixel.x(), px.x(), 1e-6);
        EXPECT_NEAR(p->pixel.y(), px.y(), 1e-6);
        EXPECT_NEAR(p->depth, d, 1e-6 * d);
    }
}

TEST(Pose, InvertIdentityAndComposeInverse) {
    const Pose inv = invert(Pose::identity());
    EXPECT_NEAR((inv.rotation_matrix() - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-15);
    EXPECT_NEAR(inv.translation.norm(), 0.0, 1e-15);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Pose p = test::random_pose(rng);
        const Eigen::Vector3d x(uniform(rng, -9, 9), uniform(rng, -9, 9), uniform(rng, -9, 9));
        EXPECT_NEAR((compose(invert(p), p).apply(x) - x).norm(), 0.0, 1e-9);
        const Pose id = compose(p, invert(p));
        EXPECT_NEAR((id.rotation_matrix() - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-9);
        EXPECT_NEAR(id.translation.norm(), 0.0, 1e-9);
    }
}

TEST(Pose, ComposeIsAssociative) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const Pose a = test::random_pose(rng), b = test::random_pose(rng), c = test::random_pose(rng);
        const Pose l = compose(compose(a, b), c);
        const Pose r = compose(a, compose(b, c));
        EXPECT_NEAR((l.rotation_matrix() - r.rotation_matrix()).norm(), 0.0, 1e-9);
        EXPECT_NEAR((l.translation - r.translation).norm(), 0.0, 1e-9);
    }
}

TEST(Pose, RotationStaysOrthonormalUnderLongChains) {
    std::mt19937_64 rng(11);
    Pose p = Pose::identity();
    for (int i = 0; i < 1000; ++i) {
        p = i % 3 == 0 ? invert(p) : compose(p, test::random_pose(rng));
        const Eigen::Matrix3d R = p.rotation_matrix();
        ASSERT_NEAR((R.transpose() * R - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-9);
        ASSERT_NEAR(R.determinant(), 1.0, 1e-9);
        ASSERT_NEAR(p.rotation.norm(), 1.0, 1e-9);
    }
}

TEST(Pose, FromWxyzNormalizesAndRejectsZero) {
    const Pose p = Pose::from_wxyz({2, 0, 0, 0}, {1, 2, 3});
    EXPECT_NEAR(p.rotation.w(), 1.0, 1e-15);
    EXPECT_THROW(Pose::from_wxyz({0, 0, 0, 0}, {0, 0, 0}), ValidationError);
}

TEST(Camera, ToCameraMatchesInversePose) {
    std::mt19937_64 rng(13);
    Camera cam;
    cam.pose = test::random_pose(rng);
    const Eigen::Vector3d x(1, -2, 3);
    EXPECT_NEAR((cam.to_camera(x) - invert(cam.pose).apply(x)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((cam.world_to_camera_rotation() * cam.pose.rotation_matrix() -
                 Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-12);
}

} // namespace
} // namespace vgd
