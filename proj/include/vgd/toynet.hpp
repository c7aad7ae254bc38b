// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/array_file.hpp"
#include "vgd/gaussian_field.hpp"
#include "vgd/geometry.hpp"
#include "vgd/image.hpp"
#include "vgd/rasterizer.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

/// Forward-only, randomly initialized reference of the feed-forward network:
/// patch tokens -> alternating global/frame attention -> depth head ->
/// Gaussian head -> render -> residual refinement.
namespace vgd::toynet {

struct NetConfig {
    int patch = 16;
    int channels = 64;      // token width
    int blocks = 2;         // global+frame attention pairs
    int heads = 4;
    int head_channels = 32; // DPT feature width per level
    int srm_channels = 16;
    int sh_degree = kDefaultShDegree;
    int max_cameras = 8;    // size of the camera token table
    std::uint64_t seed = 0;
    double init_gain = 0.02;

    void validate() const;
};

/// F frames of P x C tokens; token 0 of every frame is its camera token.
struct TokenTensor {
    std::vector<Eigen::MatrixXd> frames;
    int grid_w = 0; // patches per row
    int grid_h = 0; // patches per column

    int frame_count() const { return static_cast<int>(frames.size()); }
    int token_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].rows()); }
    int channel_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].cols()); }
};

/// Four levels with strictly doubling resolution (1/16 ... 1/2 for patch 16).
using MultiScaleFeatures = std::array<Image, 4>;

/// Softmax weights captured from one attention call, one matrix per (group, head).
struct AttentionProbe {
    std::vector<Eigen::MatrixXd> weights;
};

struct DepthHeadOutput {
    std::vector<DisparityMap> disparity;       // per frame, H x W
    std::vector<MultiScaleFeatures> features;  // per frame
};

struct GaussianHeadOutput {
    std::vector<RawParamMap> raw;              // per frame
    std::vector<MultiScaleFeatures> features;  // per frame
};

struct RefineOutput {
    Image image;    // clamp(render + residual)
    Image residual;
    Image hidden;   // input of the final 1x1 projection
};

class Network {
public:
    explicit Network(const NetConfig& cfg);

    const NetConfig& config() const { return cfg_; }

    TokenTensor patchify(const std::vector<Image>& images, const std::vector<int>& camera_ids) const;
    TokenTensor frame_attention(const TokenTensor& t, int block, AttentionProbe* probe = nullptr) const;
    TokenTensor global_attention(const TokenTensor& t, int block, AttentionProbe* probe = nullptr) const;
    /// blocks x (global attention, then frame attention) on top of patchify.
    TokenTensor encode(const std::vector<Image>& images, const std::vector<int>& camera_ids) const;

    DepthHeadOutput dpt_depth_head(const TokenTensor& t, int image_w, int image_h) const;
    GaussianHeadOutput dpt_gs_head(const std::vector<MultiScaleFeatures>& f_d, const TokenTensor& t,
                                   int image_w, int image_h) const;

    RefineOutput srm_refine_detailed(const Image& render, const MultiScaleFeatures& f_d,
                                     const MultiScaleFeatures& f_gs) const;
    Image srm_refine(const Image& render, const MultiScaleFeatures& f_d,
                     const MultiScaleFeatures& f_gs) const;

    NamedArray& parameter(const std::string& name);
    const NamedArray& parameter(const std::string& name) const;
    const ArrayStore& parameters() const { return params_; }

    /// Weight checkpoint in the named-array container; config is stored as
    /// scalar arrays under "config.*".
    void save(const std::filesystem::path& path) const;
    static Network load(const std::filesystem::path& path);

private:
    Network(const NetConfig& cfg, ArrayStore params);

    TokenTensor attention(const TokenTensor& t, const std::string& prefix, bool global,
                          AttentionProbe* probe) const;

    NetConfig cfg_;
    ArrayStore params_;
};

/// Full composition for one target view: encode -> depth head -> depth via
/// disparity_to_depth -> Gaussian head -> lift all frames -> render -> refine.
/// Refinement uses the multi-scale features of input frame `feature_frame`.
struct PipelineOutput {
    GaussianCloud cloud;
    RenderedImage render;
    Image novel;
    DepthHeadOutput depth;
    GaussianHeadOutput gaussians;
};

PipelineOutput forward_pipeline(const Network& net, const std::vector<Image>& images,
                                const std::vector<Camera>& cameras, const Camera& target,
                                int feature_frame, const RenderConfig& render_cfg,
                                double baseline = 1.0);

// Exposed for tests.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);
Image resize_bilinear(const Image& src, int width, int height);

} // namespace vgd::toynet
