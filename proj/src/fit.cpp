// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/fit.hpp"

#include "vgd/array_file.hpp"

#include <cmath>
#include <sstream>

namespace vgd::harness {

void FitConfig::validate() const {
    if (iterations < 0) {
        throw ValidationError("FitConfig: iterations must be >= 0");
    }
    if (!(lr >= 0.0) || !(lr_depth >= 0.0) || !std::isfinite(lr) || !std::isfinite(lr_depth)) {
        throw ValidationError("FitConfig: step sizes must be finite and >= 0");
    }
    if (!(half_life >= 0.0)) {
        throw ValidationError("FitConfig: half_life must be >= 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
        throw ValidationError("FitConfig: moment parameters must be in [0, 1), eps > 0");
    }
    render.validate();
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::string out = "iteration,loss,render,distill,loc,lr,accepted\n";
    for (const auto& r : trace) {
        out += std::to_string(r.iteration) + "," + format_exact(r.loss) + "," +
               format_exact(r.render) + "," + format_exact(r.distill) + "," + format_exact(r.loc) +
               "," + format_exact(r.lr) + "," + (r.accepted ? "1" : "0") + "\n";
    }
    return out;
}

std::vector<TraceRow> trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "iteration,loss,render,distill,loc,lr,accepted") {
        throw ValidationError("trace: missing header");
    }
    std::vector<TraceRow> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string f[7];
        for (auto& s : f) {
            if (!std::getline(row, s, ',')) {
                throw ValidationError("trace: line " + std::to_string(lineno) + ": too few fields");
            }
        }
        try {
            out.push_back({std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                           std::stod(f[4]), std::stod(f[5]), f[6] == "1"});
        } catch (const std::exception&) {
            throw ValidationError("trace: line " + std::to_string(lineno) + ": bad number");
        }
    }
    return out;
}

namespace {

std::size_t pixels(const FitState& s) { return static_cast<std::size_t>(s.width) * s.height; }
std::size_t raw_channels(const FitState& s) { return raw_channel_count(s.sh_degree); }
std::size_t camera_block(const FitState& s) { return pixels(s) * (raw_channels(s) + 1); }

} // namespace

std::vector<RawParamMap> FitState::raw_maps() const {
    std::vector<RawParamMap> out;
    const std::size_t n = pixels(*this) * raw_channels(*this);
    for (int c = 0; c < cameras; ++c) {
        RawParamMap m(width, height, sh_degree);
        const double* src = theta.data() + c * camera_block(*this);
        std::copy(src, src + n, m.values().data().begin());
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<DepthMap> FitState::depth_maps() const {
    std::vector<DepthMap> out;
    const std::size_t off = pixels(*this) * raw_channels(*this);
    for (int c = 0; c < cameras; ++c) {
        DepthMap d = make_depth_map(width, height, 0.0);
        const double* src = theta.data() + c * camera_block(*this) + off;
        for (std::size_t i = 0; i < pixels(*this); ++i) {
            d.values.data()[i] = std::exp(src[i]);
        }
        out.push_back(std::move(d));
    }
    return out;
}

void FitState::save(const std::filesystem::path& path) const {
    ArrayStore a;
    auto scalar = [&](const std::string& name, double v) { a[name] = {{1}, {v}}; };
    a["state.layout"] = {{4}, {double(cameras), double(width), double(height), double(sh_degree)}};
    a["state.theta"] = {{theta.size()}, theta};
    a["state.adam.m"] = {{m.size()}, m};
    a["state.adam.v"] = {{v.size()}, v};
    scalar("state.adam.step", static_cast<double>(adam_step));
    scalar("state.lr_scale", lr_scale);
    scalar("state.iteration", iteration);
    NamedArray tr{{trace.size(), 7}, {}};
    for (const auto& r : trace) {
        tr.data.insert(tr.data.end(), {double(r.iteration), r.loss, r.render, r.distill, r.loc, r.lr,
                                       r.accepted ? 1.0 : 0.0});
    }
    a["trace"] = std::move(tr);
    const auto raws = raw_maps();
    const auto depths = depth_maps();
    for (int c = 0; c < cameras; ++c) {
        const std::string p = "camera." + std::to_string(c) + ".";
        const auto& rv = raws[c].values();
        a[p + "raw"] = {{std::uint64_t(height), std::uint64_t(width), std::uint64_t(rv.channels())},
                        {rv.data().begin(), rv.data().end()}};
        a[p + "depth"] = {{std::uint64_t(height), std::uint64_t(width)},
                          {depths[c].values.data().begin(), depths[c].values.data().end()}};
    }
    write_arrays(path, a);
}

FitState FitState::load(const std::filesystem::path& path) {
    const ArrayStore a = read_arrays(path);
    FitState s;
    const auto& layout = require_array(a, "state.layout", {4});
    s.cameras = static_cast<int>(layout.data[0]);
    s.width = static_cast<int>(layout.data[1]);
    s.height = static_cast<int>(layout.data[2]);
    s.sh_degree = static_cast<int>(layout.data[3]);
    if (s.cameras < 1 || s.width < 1 || s.height < 1 || s.sh_degree < 0 || s.sh_degree > 3) {
        throw ValidationError(path.string() + ": field state.layout: invalid values");
    }
    const std::uint64_t n = static_cast<std::uint64_t>(s.cameras) * camera_block(s);
    s.theta = require_array(a, "state.theta", {n}).data;
    s.m = require_array(a, "state.adam.m", {n}).data;
    s.v = require_array(a, "state.adam.v", {n}).data;
    s.adam_step = static_cast<long long>(require_array(a, "state.adam.step", {1}).data[0]);
    s.lr_scale = require_array(a, "state.lr_scale", {1}).data[0];
    s.iteration = static_cast<int>(require_array(a, "state.iteration", {1}).data[0]);
    auto it = a.find("trace");
    if (it == a.end() || it->second.shape.size() != 2 || it->second.shape[1] != 7) {
        throw ValidationError(path.string() + ": field trace: missing or not N x 7");
    }
    const auto& tr = it->second.data;
    for (std::size_t i = 0; i + 7 <= tr.size(); i += 7) {
        s.trace.push_back({static_cast<int>(tr[i]), tr[i + 1], tr[i + 2], tr[i + 3], tr[i + 4],
                           tr[i + 5], tr[i + 6] != 0.0});
    }
    if (s.iteration != static_cast<int>(s.trace.size())) {
        throw ValidationError(path.string() + ": field state.iteration: disagrees with trace length");
    }
    return s;
}

void FitProblem::validate() const {
    if (inputs.empty() || targets.empty()) {
        throw ValidationError("fit_scene: at least one input and one target view required");
    }
    if (teacher.size() != inputs.size() || init_raw.size() != inputs.size() ||
        init_depth.size() != inputs.size()) {
        throw ValidationError("fit_scene: teacher, init_raw and init_depth need one entry per input view");
    }
    const int W = init_raw[0].width();
    const int H = init_raw[0].height();
    const int L = init_raw[0].sh_degree();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& K = inputs[i].camera.intrinsics;
        if (init_raw[i].width() != W || init_raw[i].height() != H || init_raw[i].sh_degree() != L ||
            init_depth[i].width() != W || init_depth[i].height() != H || teacher[i].width() != W ||
            teacher[i].height() != H || K.width != W || K.height != H ||
            inputs[i].image.width() != W || inputs[i].image.height() != H) {
            throw ValidationError("fit_scene: input view " + std::to_string(i) +
                                  " has inconsistent sizes");
        }
        for (double d : init_depth[i].values.data()) {
            if (!(d > 0.0) || !std::isfinite(d)) {
                throw ValidationError("fit_scene: init depth must be positive and finite");
            }
        }
    }
    for (const auto& group : {&targets, &heldout}) {
        for (const auto& v : *group) {
            if (v.image.width() != v.camera.intrinsics.width ||
                v.image.height() != v.camera.intrinsics.height || v.image.channels() != 3) {
                throw ValidationError("fit_scene: view image does not match its camera");
            }
        }
    }
}

FitState initial_state(const FitProblem& problem) {
    problem.validate();
    FitState s;
    s.cameras = static_cast<int>(problem.inputs.size());
    s.width = problem.init_raw[0].width();
    s.height = problem.init_raw[0].height();
    s.sh_degree = problem.init_raw[0].sh_degree();
    for (int c = 0; c < s.cameras; ++c) {
        const auto raw = problem.init_raw[c].values().data();
        s.theta.insert(s.theta.end(), raw.begin(), raw.end());
        for (double d : problem.init_depth[c].values.data()) {
            s.theta.push_back(std::log(d));
        }
    }
    s.m.assign(s.theta.size(), 0.0);
    s.v.assign(s.theta.size(), 0.0);
    return s;
}

RawCloud state_cloud(const FitProblem& problem, const FitState& state) {
    const auto raws = state.raw_maps();
    const auto depths = state.depth_maps();
    RawCloud cloud;
    cloud.sh_degree = state.sh_degree;
    for (int c = 0; c < state.cameras; ++c) {
        const Camera& cam = problem.inputs[c].camera;
        append(cloud, lift_raw(depths[c], raws[c], cam.intrinsics, cam.pose, cam.id));
    }
    return cloud;
}

Objective evaluate_objective(const FitProblem& problem, const FitState& state,
                             const FitConfig& cfg, const LossWeights& w, bool with_grad) {
    if (w.perceptual != 0.0) {
        throw ValidationError("fit_scene: the perceptual weight must be 0 (no differentiable metric)");
    }
    const std::size_t P = pixels(state);
    const std::size_t C = raw_channels(state);
    const std::size_t block = camera_block(state);
    const RawCloud raw = state_cloud(problem, state);
    const GaussianCloud cloud = activate(raw);
    const auto depths = state.depth_maps();

    Objective obj;
    if (with_grad) {
        obj.grad.assign(state.theta.size(), 0.0);
    }

    const double nt = static_cast<double>(problem.targets.size());
    for (const auto& target : problem.targets) {
        const RenderedImage r = render(cloud, target.camera, cfg.render);
        if (!with_grad) {
            obj.render += render_loss(r.color, target.image, w).total / nt;
            continue;
        }
        ValueAndGrad vg = render_loss_grad(r.color, target.image, w);
        obj.render += vg.value / nt;
        for (double& g : vg.grad.data()) {
            g *= w.render / nt;
        }
        const GradientSet gs = backward(raw, target.camera, cfg.render, vg.grad);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const std::size_t cam = i / P;
            const std::size_t px = i % P;
            double* g = obj.grad.data() + cam * block + px * C;
            for (int k = 0; k < 4; ++k) {
                g[kRawRotation + k] += gs.raw_rotation[i][k];
            }
            g[kRawOpacity] += gs.raw_opacity[i];
            for (int k = 0; k < 3; ++k) {
                g[kRawScale + k] += gs.raw_scale[i][k];
            }
            for (std::size_t k = 0; k < gs.sh[i].size(); ++k) {
                g[kRawSh + k] += gs.sh[i][k];
            }
            // mean = center + D * R (K^-1 [u, v, 1]), D = exp(log-depth)
            const Camera& ic = problem.inputs[cam].camera;
            const auto& K = ic.intrinsics;
            const int y = static_cast<int>(px) / state.width;
            const int x = static_cast<int>(px) % state.width;
            const Eigen::Vector3d ray((x + 0.5 - K.cx) / K.fx, (y + 0.5 - K.cy) / K.fy, 1.0);
            const double D = depths[cam].values.data()[px];
            obj.grad[cam * block + P * C + px] += gs.mean[i].dot(ic.pose.rotation * ray) * D;
        }
    }

    const double ni = static_cast<double>(problem.inputs.size());
    double smooth = 0.0;
    for (int c = 0; c < state.cameras; ++c) {
        const auto& K = problem.inputs[c].camera.intrinsics;
        DisparityMap disp = make_disparity_map(state.width, state.height, 0.0);
        for (std::size_t i = 0; i < P; ++i) {
            disp.values.data()[i] = K.fx / depths[c].values.data()[i];
        }
        double* gd = with_grad ? obj.grad.data() + c * block + P * C : nullptr;
        if (!with_grad) {
            obj.distill += distill_loss(depths[c], problem.teacher[c]) / ni;
            smooth += edge_aware_smoothness(disp, problem.inputs[c].image) / ni;
            continue;
        }
        const ValueAndGrad dv = distill_loss_grad(depths[c], problem.teacher[c]);
        obj.distill += dv.value / ni;
        const ValueAndGrad sv = edge_aware_smoothness_grad(disp, problem.inputs[c].image);
        smooth += sv.value / ni;
        const double wd = w.distill / ni;
        const double ws = w.loc * w.smooth / ni;
        for (std::size_t i = 0; i < P; ++i) {
            const double D = depths[c].values.data()[i];
            // d disp / d log-depth = -disp
            gd[i] += wd * dv.grad.data()[i] * D - ws * sv.grad.data()[i] * disp.values.data()[i];
        }
    }
    obj.loc = loc_loss(std::nullopt, std::nullopt, std::nullopt, smooth, w).total;
    LossReport render_report;
    render_report.total = obj.render;
    obj.total = total_loss(render_report, obj.distill, obj.loc, w).total;
    return obj;
}

namespace {

std::vector<double> step_sizes(const FitState& s, const FitConfig& cfg) {
    std::vector<double> lr(s.theta.size(), 0.0);
    const std::size_t P = pixels(s);
    const std::size_t C = raw_channels(s);
    for (int c = 0; c < s.cameras; ++c) {
        double* base = lr.data() + c * camera_block(s);
        for (std::size_t p = 0; p < P; ++p) {
            double* px = base + p * C;
            for (std::size_t k = 0; k < C; ++k) {
                const int ch = static_cast<int>(k);
                bool free = false;
                if (ch < kRawOpacity) {
                    free = cfg.groups.rotation;
                } else if (ch == kRawOpacity) {
                    free = cfg.groups.opacity;
                } else if (ch < kRawSh) {
                    free = cfg.groups.scale;
                } else {
                    free = cfg.groups.sh;
                }
                px[k] = free ? cfg.lr : 0.0;
            }
            base[P * C + p] = cfg.groups.depth ? cfg.lr_depth : 0.0;
        }
    }
    return lr;
}

MetricTable score_heldout(const FitProblem& problem, const FitState& state, const FitConfig& cfg,
                          std::vector<Image>* renders) {
    const GaussianCloud cloud = activate(state_cloud(problem, state));
    std::vector<Image> pred, gt;
    std::vector<std::string> names;
    for (const auto& v : problem.heldout) {
        pred.push_back(render_bruteforce(cloud, v.camera, cfg.render).color);
        gt.push_back(v.image);
        names.push_back("cam_" + std::to_string(v.camera.id));
    }
    if (renders) {
        *renders = pred;
    }
    return evaluate(pred, gt, names);
}

bool finite_state(const FitState& s) {
    const std::size_t P = pixels(s);
    const std::size_t C = raw_channels(s);
    for (int c = 0; c < s.cameras; ++c) {
        const double* base = s.theta.data() + c * camera_block(s);
        for (std::size_t i = 0; i < P * C; ++i) {
            if (!std::isfinite(base[i])) {
                return false;
            }
        }
        for (std::size_t i = 0; i < P; ++i) {
            const double d = std::exp(base[P * C + i]);
            if (!(d > 0.0) || !std::isfinite(d)) {
                return false;
            }
        }
    }
    return true;
}

bool finite(const Objective& o) {
    if (!std::isfinite(o.total)) {
        return false;
    }
    for (double g : o.grad) {
        if (!std::isfinite(g)) {
            return false;
        }
    }
    return true;
}

} // namespace

FitResult fit_scene(const FitProblem& problem, const FitConfig& cfg, const LossWeights& w,
                    std::optional<FitState> resume,
                    const std::function<void(const TraceRow&)>& on_iteration) {
    cfg.validate();
    w.validate();
    FitResult result;
    const FitState init = initial_state(problem);
    if (resume) {
        if (resume->cameras != init.cameras || resume->width != init.width ||
            resume->height != init.height || resume->sh_degree != init.sh_degree) {
            throw ValidationError("fit_scene: resume state does not match the problem layout");
        }
        result.state = std::move(*resume);
    } else {
        result.state = init;
    }
    FitState& s = result.state;
    if (!problem.heldout.empty()) {
        result.initial_metrics = score_heldout(problem, init, cfg, nullptr);
    }

    auto objective = [&](const FitState& st) {
        try {
            if (!finite_state(st)) {
                throw NumericalError("parameters left the representable range");
            }
            Objective o = evaluate_objective(problem, st, cfg, w, true);
            if (!finite(o)) {
                throw NumericalError("non-finite loss or gradient");
            }
            return o;
        } catch (const FitDivergence&) {
            throw;
        } catch (const NumericalError& e) {
            throw FitDivergence(std::string("fit diverged at iteration ") +
                                    std::to_string(st.iteration) + ": " + e.what(),
                                s.trace);
        }
    };

    const std::vector<double> lr = step_sizes(s, cfg);
    Objective cur = objective(s);
    while (s.iteration < cfg.iterations) {
        const int it = s.iteration;
        const double schedule = cfg.half_life > 0.0 ? std::pow(0.5, it / cfg.half_life) : 1.0;
        const double scale = s.lr_scale * schedule;

        const std::vector<double> theta0 = s.theta;
        const std::vector<double> m0 = s.m;
        const std::vector<double> v0 = s.v;
        const long long t0 = s.adam_step;

        s.adam_step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.adam_step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.adam_step));
        for (std::size_t i = 0; i < s.theta.size(); ++i) {
            const double g = cur.grad[i];
            s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * g;
            s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            s.theta[i] -= lr[i] * scale * mhat / (std::sqrt(vhat) + cfg.eps);
        }

        Objective next = objective(s);
        bool accepted = true;
        if (cfg.monotone && next.total > cur.total) {
            s.theta = theta0;
            s.m = m0;
            s.v = v0;
            s.adam_step = t0;
            s.lr_scale *= 0.5;
            accepted = false;
        } else {
            cur = std::move(next);
        }
        TraceRow row{it, cur.total, cur.render, cur.distill, cur.loc, cfg.lr * scale, accepted};
        s.trace.push_back(row);
        s.iteration = it + 1;
        if (on_iteration) {
            on_iteration(row);
        }
    }
    result.final_objective = std::move(cur);
    if (!problem.heldout.empty()) {
        result.final_metrics = score_heldout(problem, s, cfg, &result.heldout_renders);
    }
    return result;
}

} // namespace vgd::harness
