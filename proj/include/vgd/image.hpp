// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vgd {

/// Dense row-major H x W x C grid of doubles. Used for color images,
/// per-pixel scalar maps and gradient buffers alike.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
    double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

    std::span<double> pixel(int y, int x) {
        return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
    }
    std::span<const double> pixel(int y, int x) const {
        return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    bool operator==(const Image& other) const = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Throws ValidationError unless the two images share width, height and channels.
void require_same_shape(const Image& a, const Image& b, const char* what);

/// Throws ValidationError if any element is NaN or infinite.
void require_finite(const Image& img, const char* what);

} // namespace vgd
