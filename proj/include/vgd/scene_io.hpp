// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/gaussian_field.hpp"
#include "vgd/geometry.hpp"
#include "vgd/image.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vgd {

// Rig and scene files are JSON documents. Both carry a "conventions" block:
//   quaternion: "wxyz", pose: "camera_to_world",
//   camera_frame: "x right, y down, z forward", pixel_center: "col + 0.5, row + 0.5".
// Malformed input raises ValidationError naming the file plus either the
// line/column of a syntax error or the JSON pointer of the offending field.

nlohmann::json conventions_block();

nlohmann::json rig_to_json(const std::vector<Camera>& cameras);
std::vector<Camera> rig_from_json(const nlohmann::json& doc, const std::string& source = "rig");
void write_rig(const std::filesystem::path& path, const std::vector<Camera>& cameras);
std::vector<Camera> read_rig(const std::filesystem::path& path);

nlohmann::json scene_to_json(const GaussianCloud& cloud);
GaussianCloud scene_from_json(const nlohmann::json& doc, const std::string& source = "scene");
void write_scene(const std::filesystem::path& path, const GaussianCloud& cloud);
GaussianCloud read_scene(const std::filesystem::path& path);

/// Parses a JSON file, converting syntax errors to ValidationError with line and column.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed, trailing newline; doubles round-trip exactly.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

// Images. PPM is binary P6 with maxval 255 (values clamped to [0, 1] and
// rounded). PFM stores float32 little-endian, bottom row first, "PF" for 3
// channels and "Pf" for 1 channel.
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& img);
Image read_pfm(const std::filesystem::path& path);
/// Dispatches on the extension (.ppm or .pfm).
void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);

/// Rounds every element to the nearest float, as a PFM round trip would.
Image round_to_float(const Image& img);

/// Image files (.ppm/.pfm) in a directory, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Writes `bytes` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace vgd
