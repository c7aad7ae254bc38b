// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vgd {

/// Central-difference check of the rasterizer backward pass and of every loss
/// gradient on seeded random problems. Rasterizer trials use a single camera
/// at the origin, 1..max_gaussians Gaussians in front of it with
/// well-separated depths, colors away from the clamp, and the untruncated
/// compositing sum (alpha_min = transmittance_floor = cutoff_sigma = 0).
struct GradcheckConfig {
    std::uint64_t seed = 0;
    int trials = 100;
    int size = 8;            // render and loss map side (SSIM-based losses use >= 16)
    int max_gaussians = 20;
    int threads = 1;
    bool deterministic = true;
    double render_step = 1e-5;
    double loss_step = 1e-6;
    double rel_tol = 1e-3;
    double abs_tol = 1e-6;
    double kink_margin = 1e-6; // L1 entries with |pred - target| below this are skipped

    void validate() const;
};

struct GradcheckGroup {
    std::string name;
    long long checked = 0;
    long long skipped = 0;
    long long failures = 0;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0; // over entries whose magnitude exceeds abs_tol

    bool passed() const { return failures == 0; }
};

struct GradcheckReport {
    GradcheckConfig config;
    std::vector<GradcheckGroup> groups; // empty when trials == 0

    bool passed() const;
    /// Tab-separated table with a trailing "result PASS|FAIL" line.
    std::string to_text() const;
};

GradcheckReport run_gradcheck(const GradcheckConfig& cfg);

} // namespace vgd
