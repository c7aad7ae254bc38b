// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/image.hpp"

#include "vgd/errors.hpp"

#include <cmath>
#include <string>

namespace vgd {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 0) {
        throw ValidationError("Image: negative dimension");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ValidationError(std::string(what) + ": shape mismatch (" + std::to_string(a.width()) +
                              "x" + std::to_string(a.height()) + "x" + std::to_string(a.channels()) +
                              " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                              "x" + std::to_string(b.channels()) + ")");
    }
}

void require_finite(const Image& img, const char* what) {
    for (double v : img.data()) {
        if (!std::isfinite(v)) {
            throw ValidationError(std::string(what) + ": non-finite value");
        }
    }
}

} // namespace vgd
