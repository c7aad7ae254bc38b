// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgd/errors.hpp"
#include "vgd/gaussian_field.hpp"
#include "vgd/geometry.hpp"
#include "vgd/image.hpp"
#include "vgd/losses.hpp"
#include "vgd/rasterizer.hpp"
#include "vgd/scene_harness.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vgd::harness {

struct View {
    Image image;
    Camera camera;
};

/// Which parameter blocks the optimizer may move. Means move through log-depth.
struct ParamGroups {
    bool depth = true;
    bool rotation = true;
    bool scale = true;
    bool opacity = true;
    bool sh = true;
};

struct FitConfig {
    int iterations = 500;
    double lr = 1e-2;        // raw rotation / opacity / scale / SH
    double lr_depth = 1e-2;  // log-depth
    double half_life = 250;  // lr(i) = lr * 0.5^(i / half_life); 0 keeps it constant
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-12;
    /// Reject any step that raises the loss, restore the previous state and
    /// halve the step scale, so the trace never increases.
    bool monotone = true;
    ParamGroups groups;
    RenderConfig render;

    void validate() const;
};

/// One record per iteration, describing the state after its update decision.
struct TraceRow {
    int iteration = 0;
    double loss = 0.0;
    double render = 0.0;
    double distill = 0.0;
    double loc = 0.0;
    double lr = 0.0;
    bool accepted = true;
};

std::string trace_to_csv(const std::vector<TraceRow>& trace);
std::vector<TraceRow> trace_from_csv(const std::string& text);

/// Everything needed to continue an interrupted fit bit-exactly.
struct FitState {
    int cameras = 0;
    int width = 0;
    int height = 0;
    int sh_degree = kDefaultShDegree;
    std::vector<double> theta; // per camera: raw map (H*W*C) then log-depth (H*W)
    std::vector<double> m;
    std::vector<double> v;
    long long adam_step = 0;
    double lr_scale = 1.0;
    int iteration = 0; // next iteration to run
    std::vector<TraceRow> trace;

    std::vector<RawParamMap> raw_maps() const;
    std::vector<DepthMap> depth_maps() const;

    void save(const std::filesystem::path& path) const;
    static FitState load(const std::filesystem::path& path);
};

struct FitProblem {
    std::vector<View> inputs;          // lifted cameras, with their images
    std::vector<View> targets;         // supervise L_render
    std::vector<DepthMap> teacher;     // per input camera, supervises L_distill
    std::vector<RawParamMap> init_raw; // per input camera
    std::vector<DepthMap> init_depth;  // per input camera
    std::vector<View> heldout;         // optional, scored before and after

    void validate() const;
};

struct Objective {
    double total = 0.0;
    double render = 0.0;
    double distill = 0.0;
    double loc = 0.0;
    std::vector<double> grad; // empty unless requested
};

/// Total loss (and optionally its gradient with respect to theta).
Objective evaluate_objective(const FitProblem& problem, const FitState& state,
                             const FitConfig& cfg, const LossWeights& w, bool with_grad);

/// Raw cloud of the current state: every input camera lifted per pixel.
RawCloud state_cloud(const FitProblem& problem, const FitState& state);

FitState initial_state(const FitProblem& problem);

struct FitResult {
    FitState state;
    Objective final_objective;
    std::optional<MetricTable> initial_metrics; // held-out views, brute-force renderer
    std::optional<MetricTable> final_metrics;
    std::vector<Image> heldout_renders;
};

/// Raised when the loss or a render becomes non-finite; carries the trace so far.
class FitDivergence : public NumericalError {
public:
    FitDivergence(const std::string& what, std::vector<TraceRow> trace)
        : NumericalError(what), trace_(std::move(trace)) {}
    const std::vector<TraceRow>& trace() const { return trace_; }

private:
    std::vector<TraceRow> trace_;
};

/// Runs until state.iteration == cfg.iterations. Pass `resume` to continue a
/// saved state.
FitResult fit_scene(const FitProblem& problem, const FitConfig& cfg, const LossWeights& w,
                    std::optional<FitState> resume = std::nullopt,
                    const std::function<void(const TraceRow&)>& on_iteration = {});

} // namespace vgd::harness
