// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/array_file.hpp"
#include "vgd/errors.hpp"
#include "vgd/scene_harness.hpp"
#include "vgd/scene_io.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace vgd {
namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

TEST(RigFile, RoundTripIsExact) {
    const auto cams = harness::make_rig({});
    const auto dir = test::temp_dir("rig");
    write_rig(dir / "rig.json", cams);
    const auto back = read_rig(dir / "rig.json");
    ASSERT_EQ(back.size(), cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        EXPECT_EQ(back[i].id, cams[i].id);
        EXPECT_EQ(back[i].intrinsics, cams[i].intrinsics);
        EXPECT_LT((back[i].pose.wxyz() - cams[i].pose.wxyz()).norm(), 1e-15);
        EXPECT_EQ(back[i].pose.translation, cams[i].pose.translation);
    }
    const auto doc = read_json_file(dir / "rig.json");
    EXPECT_EQ(doc["conventions"]["quaternion"], "wxyz");
    EXPECT_EQ(doc["conventions"]["pose"], "camera_to_world");
}

TEST(RigFile, FieldDiagnostics) {
    auto doc = rig_to_json(harness::make_rig({}));
    doc["cameras"][2]["fx"] = "wide";
    EXPECT_NE(error_of([&] { rig_from_json(doc, "r.json"); }).find("/cameras/2/fx"), std::string::npos);
    doc = rig_to_json(harness::make_rig({}));
    doc["cameras"][1].erase("translation");
    EXPECT_NE(error_of([&] { rig_from_json(doc, "r.json"); }).find("/cameras/1/translation"), std::string::npos);
    doc = rig_to_json(harness::make_rig({}));
    doc["cameras"][0]["cx"] = -3.0;
    EXPECT_NE(error_of([&] { rig_from_json(doc, "r.json"); }).find("/cameras/0"), std::string::npos);
    doc = rig_to_json(harness::make_rig({}));
    doc["cameras"][3]["id"] = 0;
    EXPECT_NE(error_of([&] { rig_from_json(doc, "r.json"); }).find("duplicate"), std::string::npos);
    doc["format"] = "other";
    EXPECT_NE(error_of([&] { rig_from_json(doc, "r.json"); }).find("/format"), std::string::npos);
}

TEST(JsonFile, SyntaxErrorReportsLine) {
    const auto dir = test::temp_dir("json");
    write_text_file(dir / "bad.json", "{\n  \"format\": \"vgd-rig\",\n  \"cameras\": [ 1, ]\n}\n");
    const std::string msg = error_of([&] { read_rig(dir / "bad.json"); });
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(error_of([&] { read_rig(dir / "missing.json"); }), "");
}

TEST(SceneFile, RoundTripIsExact) {
    harness::SceneSpec spec;
    spec.count = 40;
    spec.sh_degree = 2;
    const GaussianCloud cloud = harness::make_scene(spec);
    const auto dir = test::temp_dir("scene");
    write_scene(dir / "scene.json", cloud);
    const GaussianCloud back = read_scene(dir / "scene.json");
    ASSERT_EQ(back.size(), cloud.size());
    EXPECT_EQ(back.sh_degree, 2);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        EXPECT_EQ(back.primitives[i].mean, cloud.primitives[i].mean);
        EXPECT_EQ(back.primitives[i].rotation, cloud.primitives[i].rotation);
        EXPECT_EQ(back.primitives[i].scale, cloud.primitives[i].scale);
        EXPECT_EQ(back.primitives[i].opacity, cloud.primitives[i].opacity);
        EXPECT_EQ(back.primitives[i].sh, cloud.primitives[i].sh);
    }
}

TEST(SceneFile, EmptyAndInvalid) {
    GaussianCloud empty;
    const auto doc = scene_to_json(empty);
    EXPECT_TRUE(scene_from_json(doc).empty());
    auto bad = scene_to_json(harness::make_scene({}));
    bad["gaussians"][5]["opacity"] = 1.5;
    EXPECT_NE(error_of([&] { scene_from_json(bad, "s.json"); }).find("/gaussians/5"), std::string::npos);
    bad = scene_to_json(harness::make_scene({}));
    bad["gaussians"][0]["sh"].erase(0);
    EXPECT_NE(error_of([&] { scene_from_json(bad, "s.json"); }).find("/gaussians/0/sh"), std::string::npos);
}

TEST(Images, PpmRoundTripQuantizes) {
    std::mt19937_64 rng(1);
    Image img = test::random_image(rng, 7, 5, 3);
    img.at(0, 0, 0) = 1.4;
    img.at(0, 0, 1) = -0.2;
    const auto dir = test::temp_dir("ppm");
    write_image(dir / "a.ppm", img);
    const Image back = read_image(dir / "a.ppm");
    ASSERT_TRUE(back.same_shape(img));
    EXPECT_EQ(back.at(0, 0, 0), 1.0);
    EXPECT_EQ(back.at(0, 0, 1), 0.0);
    for (std::size_t i = 3; i < img.size(); ++i) {
        EXPECT_LE(std::abs(back.data()[i] - img.data()[i]), 0.5 / 255 + 1e-12);
    }
    write_ppm(dir / "b.ppm", back);
    EXPECT_TRUE(read_ppm(dir / "b.ppm") == back);
    EXPECT_THROW(write_ppm(dir / "c.ppm", Image(2, 2, 1)), ValidationError);
}

TEST(Images, PfmRoundTripIsFloatExact) {
    std::mt19937_64 rng(2);
    const auto dir = test::temp_dir("pfm");
    for (int c : {1, 3}) {
        const Image img = test::random_image(rng, 6, 4, c, -2, 5);
        write_pfm(dir / "a.pfm", img);
        const Image back = read_pfm(dir / "a.pfm");
        EXPECT_TRUE(back == round_to_float(img));
    }
    Image asym(3, 2, 1);
    asym.at(0, 0) = 1.0;
    write_pfm(dir / "b.pfm", asym);
    EXPECT_EQ(read_pfm(dir / "b.pfm").at(0, 0), 1.0);
}

TEST(Images, MalformedFiles) {
    const auto dir = test::temp_dir("badimg");
    write_text_file(dir / "a.ppm", "P3\n2 2\n255\n");
    EXPECT_THROW(read_ppm(dir / "a.ppm"), ValidationError);
    write_text_file(dir / "b.ppm", "P6\n4 4\n255\nabc");
    EXPECT_THROW(read_ppm(dir / "b.ppm"), ValidationError);
    write_text_file(dir / "c.pfm", "PF\n2 2\n1.0\n");
    EXPECT_THROW(read_pfm(dir / "c.pfm"), ValidationError);
    EXPECT_THROW(write_image(dir / "d.png", Image(2, 2, 3)), ValidationError);
}

TEST(Images, ListSortedByName) {
    const auto dir = test::temp_dir("list");
    for (const char* n : {"cam_2.ppm", "cam_0.pfm", "cam_1.ppm", "notes.txt"}) {
        write_text_file(dir / n, "x");
    }
    const auto files = list_images(dir);
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[0].filename(), "cam_0.pfm");
    EXPECT_EQ(files[2].filename(), "cam_2.ppm");
}

TEST(ArrayFile, RoundTripAndDeterministicBytes) {
    ArrayStore s;
    s["b"] = {{2, 3}, {1, 2, 3, 4, 5, 6}};
    s["a"] = {{1}, {0.1}};
    const auto dir = test::temp_dir("arrays");
    write_arrays(dir / "x.vgda", s);
    write_arrays(dir / "y.vgda", s);
    EXPECT_EQ(read_text_file(dir / "x.vgda"), read_text_file(dir / "y.vgda"));
    const ArrayStore back = read_arrays(dir / "x.vgda");
    EXPECT_EQ(back.at("b").data, s["b"].data);
    EXPECT_EQ(back.at("b").shape, s["b"].shape);
    EXPECT_NO_THROW(require_array(back, "b", {2, 3}));
    EXPECT_THROW(require_array(back, "b", {3, 2}), ValidationError);
    EXPECT_THROW(require_array(back, "c", {1}), ValidationError);
    s["bad"] = {{4}, {1.0}};
    EXPECT_THROW(write_arrays(dir / "z.vgda", s), ValidationError);
    write_text_file(dir / "t.vgda", "VGDARR01\x05");
    EXPECT_THROW(read_arrays(dir / "t.vgda"), ValidationError);
}

} // namespace
} // namespace vgd
