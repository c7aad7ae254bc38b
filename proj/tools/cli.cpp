// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "vgd/errors.hpp"
#include "vgd/fit.hpp"
#include "vgd/gradcheck.hpp"
#include "vgd/rasterizer.hpp"
#include "vgd/scene_harness.hpp"
#include "vgd/scene_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>

#ifndef VGD_VERSION
#define VGD_VERSION "0.0.0"
#endif

namespace vgd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class BadArguments : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    int threads = 1;
    bool deterministic = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--threads", c.threads, "worker threads (<= 0: hardware concurrency)");
    sub->add_flag("--deterministic", c.deterministic,
                  "fixed reduction order; output independent of --threads");
}

/// Resolved options of one run, in command-line order. Recorded in the
/// manifest both as a config object and as replayable argv.
struct Resolved {
    std::string command;
    std::vector<std::pair<std::string, json>> options;
    std::vector<std::string> positional;

    void set(const std::string& flag, json value) { options.emplace_back(flag, std::move(value)); }

    void common(const Common& c) {
        if (c.deterministic) {
            set("deterministic", true);
        } else {
            set("threads", c.threads);
        }
    }

    std::vector<std::string> argv() const {
        std::vector<std::string> out;
        for (const auto& [flag, v] : options) {
            if (v.is_boolean()) {
                if (v.get<bool>()) {
                    out.push_back("--" + flag);
                }
                continue;
            }
            out.push_back("--" + flag);
            if (v.is_string()) {
                out.push_back(v.get<std::string>());
            } else if (v.is_number_float()) {
                out.push_back(harness::format_exact(v.get<double>()));
            } else {
                out.push_back(v.dump());
            }
        }
        out.insert(out.end(), positional.begin(), positional.end());
        return out;
    }

    json config() const {
        json c = json::object();
        for (const auto& [flag, v] : options) {
            c[flag] = v;
        }
        if (!positional.empty()) {
            c["positional"] = positional;
        }
        return c;
    }
};

/// Manifest next to the outputs. Paths of outputs are relative to the
/// manifest's directory, so reruns into different places give equal bytes.
void write_manifest(const fs::path& manifest_path, const Resolved& r, const std::string& output,
                    const std::vector<std::string>& outputs, const json& seeds = json::object()) {
    json m = {{"tool", "vgd"},
              {"version", VGD_VERSION},
              {"command", r.command},
              {"config", r.config()},
              {"seeds", seeds},
              {"argv", r.argv()},
              {"output", output},
              {"outputs", outputs}};
    write_json_file(manifest_path, m);
}

RenderConfig render_config(const Common& c, int sh_degree) {
    RenderConfig rc;
    rc.threads = c.threads;
    rc.deterministic = c.deterministic;
    rc.sh_degree = sh_degree;
    return rc;
}

std::string cam_name(const Camera& c) { return "cam_" + std::to_string(c.id); }

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 0;
    int cameras = 6;
    std::optional<double> spacing;
    double fov = 66.0;
    int width = 64;
    int height = 64;
    double radius = 0.3;
    int gaussians = 300;
    std::string layout = "box";
    int sh_degree = kDefaultShDegree;
    double noise_std = 0.05;
    double fill_depth = 30.0;
    double target_offset = 1.0;
    double heldout_offset = 0.5;
    Common common;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    harness::RigSpec rs;
    rs.cameras = a.cameras;
    rs.yaw_spacing_deg = a.spacing.value_or(a.cameras > 0 ? 360.0 / a.cameras : 0.0);
    rs.hfov_deg = a.fov;
    rs.width = a.width;
    rs.height = a.height;
    rs.radius = a.radius;
    harness::SceneSpec ss;
    ss.seed = a.seed;
    ss.count = a.gaussians;
    ss.layout = a.layout;
    ss.sh_degree = a.sh_degree;

    const auto cams = harness::make_rig(rs);
    const auto targets = harness::translate_rig(cams, {a.target_offset, 0.0, 0.0});
    const auto heldout = harness::translate_rig(cams, {a.heldout_offset, 0.0, 0.0});
    const GaussianCloud cloud = harness::make_scene(ss);
    const RenderConfig rc = render_config(a.common, ss.sh_degree);

    const fs::path dir = a.out;
    std::vector<std::string> outputs;
    auto emit = [&](const std::string& rel) { outputs.push_back(rel); return dir / rel; };
    write_rig(emit("rig.json"), cams);
    write_rig(emit("targets_rig.json"), targets);
    write_rig(emit("heldout_rig.json"), heldout);
    write_scene(emit("scene.json"), cloud);
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const std::string name = cam_name(cams[i]);
        write_ppm(emit("views/" + name + ".ppm"), render(cloud, cams[i], rc).color);
        write_ppm(emit("targets/" + name + ".ppm"), render(cloud, targets[i], rc).color);
        write_ppm(emit("heldout/" + name + ".ppm"), render(cloud, heldout[i], rc).color);
        const DepthMap teacher = harness::completed_depth(cloud, cams[i], a.noise_std, a.fill_depth,
                                                          a.seed + 1 + i, rc);
        write_pfm(emit("teacher/" + name + ".pfm"), teacher.values);
    }

    Resolved r{"synth", {}, {}};
    r.set("seed", a.seed);
    r.set("cameras", a.cameras);
    r.set("spacing", rs.yaw_spacing_deg);
    r.set("fov", a.fov);
    r.set("width", a.width);
    r.set("height", a.height);
    r.set("radius", a.radius);
    r.set("gaussians", a.gaussians);
    r.set("layout", a.layout);
    r.set("sh-degree", a.sh_degree);
    r.set("noise-std", a.noise_std);
    r.set("fill-depth", a.fill_depth);
    r.set("target-offset", a.target_offset);
    r.set("heldout-offset", a.heldout_offset);
    r.common(a.common);
    write_manifest(dir / "manifest.json", r, ".", outputs,
                   {{"scene", a.seed}, {"teacher_noise", "seed + 1 + camera index"}});
    out << "wrote " << cams.size() << " cameras, " << cloud.size() << " gaussians to "
        << dir.string() << "\n"
        << "pairwise overlap " << harness::format_exact(harness::pairwise_overlap(rs)) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
    std::string scene;
    std::string rig;
    int camera = 0;
    std::string out;
    bool oracle = false;
    int tile_size = 16;
    std::optional<int> sh_degree;
    Common common;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
    const GaussianCloud cloud = read_scene(a.scene);
    const auto rig = read_rig(a.rig);
    auto it = std::find_if(rig.begin(), rig.end(), [&](const Camera& c) { return c.id == a.camera; });
    if (it == rig.end()) {
        throw BadArguments("unknown camera id " + std::to_string(a.camera) + " in " + a.rig);
    }
    RenderConfig rc = render_config(a.common, a.sh_degree.value_or(cloud.sh_degree));
    rc.tile_size = a.tile_size;
    const Image img = a.oracle ? render_bruteforce(cloud, *it, rc).color : render(cloud, *it, rc).color;
    const fs::path path = a.out;
    write_image(path, img);

    Resolved r{"render", {}, {}};
    r.set("scene", a.scene);
    r.set("rig", a.rig);
    r.set("camera", a.camera);
    r.set("oracle", a.oracle);
    r.set("tile-size", a.tile_size);
    r.set("sh-degree", rc.sh_degree);
    r.common(a.common);
    const std::string name = path.filename().string();
    write_manifest(path.string() + ".manifest.json", r, name, {name});
    out << "rendered camera " << a.camera << (a.oracle ? " (oracle)" : "") << " to " << path.string()
        << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- diff

struct DiffArgs {
    std::string a;
    std::string b;
    double tol = 1e-5;
    std::string out;
};

int cmd_diff(const DiffArgs& a, std::ostream& out) {
    const Image x = read_image(a.a);
    const Image y = read_image(a.b);
    require_same_shape(x, y, "diff");
    double max_diff = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(x.data()[i] - y.data()[i]));
    }
    const bool ok = max_diff <= a.tol;
    const std::string report = "max_abs_diff\t" + harness::format_exact(max_diff) + "\ntol\t" +
                               harness::format_exact(a.tol) + "\nresult\t" +
                               (ok ? "PASS" : "FAIL") + "\n";
    out << report;
    if (!a.out.empty()) {
        write_text_file(a.out, report);
        Resolved r{"diff", {}, {a.a, a.b}};
        r.set("tol", a.tol);
        const std::string name = fs::path(a.out).filename().string();
        write_manifest(a.out + ".manifest.json", r, name, {name});
    }
    return ok ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    std::uint64_t seed = 0;
    int trials = 100;
    int size = 8;
    int max_gaussians = 20;
    std::string out;
    Common common;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    GradcheckConfig cfg;
    cfg.seed = a.seed;
    cfg.trials = a.trials;
    cfg.size = a.size;
    cfg.max_gaussians = a.max_gaussians;
    cfg.threads = a.common.threads;
    cfg.deterministic = a.common.deterministic;
    const GradcheckReport report = run_gradcheck(cfg);
    const std::string text = report.to_text();
    out << text;
    if (!a.out.empty()) {
        write_text_file(a.out, text);
        Resolved r{"gradcheck", {}, {}};
        r.set("seed", a.seed);
        r.set("trials", a.trials);
        r.set("size", a.size);
        r.set("max-gaussians", a.max_gaussians);
        r.common(a.common);
        const std::string name = fs::path(a.out).filename().string();
        write_manifest(a.out + ".manifest.json", r, name, {name}, {{"gradcheck", a.seed}});
    }
    return report.passed() ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string data;
    std::string out;
    int iterations = 500;
    double lr = 1e-2;
    double lr_depth = 1e-2;
    double half_life = 250.0;
    double init_opacity = 0.5;
    bool no_monotone = false;
    int sh_degree = kDefaultShDegree;
    std::string resume;
    Common common;
};

std::vector<harness::View> load_views(const fs::path& data, const std::string& rig_file,
                                      const std::string& dir) {
    std::vector<harness::View> out;
    for (const auto& cam : read_rig(data / rig_file)) {
        out.push_back({read_image(data / dir / (cam_name(cam) + ".ppm")), cam});
    }
    return out;
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
    const fs::path data = a.data;
    harness::FitProblem problem;
    problem.inputs = load_views(data, "rig.json", "views");
    problem.targets = load_views(data, "targets_rig.json", "targets");
    problem.heldout = load_views(data, "heldout_rig.json", "heldout");
    for (const auto& v : problem.inputs) {
        DepthMap teacher{read_pfm(data / "teacher" / (cam_name(v.camera) + ".pfm"))};
        problem.init_raw.push_back(
            harness::initial_params(teacher, v.camera.intrinsics, a.sh_degree, {a.init_opacity, 0.7}));
        problem.init_depth.push_back(teacher);
        problem.teacher.push_back(std::move(teacher));
    }

    harness::FitConfig cfg;
    cfg.iterations = a.iterations;
    cfg.lr = a.lr;
    cfg.lr_depth = a.lr_depth;
    cfg.half_life = a.half_life;
    cfg.monotone = !a.no_monotone;
    cfg.render = render_config(a.common, a.sh_degree);
    const LossWeights w;

    Resolved r{"fit", {}, {}};
    r.set("data", a.data);
    r.set("iterations", a.iterations);
    r.set("lr", a.lr);
    r.set("lr-depth", a.lr_depth);
    r.set("half-life", a.half_life);
    r.set("init-opacity", a.init_opacity);
    r.set("no-monotone", a.no_monotone);
    r.set("sh-degree", a.sh_degree);
    if (!a.resume.empty()) {
        r.set("resume", a.resume);
    }
    r.common(a.common);

    const fs::path dir = a.out;
    std::optional<harness::FitState> resume;
    if (!a.resume.empty()) {
        resume = harness::FitState::load(a.resume);
    }
    harness::FitResult result;
    try {
        result = harness::fit_scene(problem, cfg, w, std::move(resume));
    } catch (const harness::FitDivergence& e) {
        write_text_file(dir / "trace.csv", harness::trace_to_csv(e.trace()));
        write_manifest(dir / "manifest.json", r, ".", {"trace.csv"});
        throw;
    }

    std::vector<std::string> outputs;
    auto emit = [&](const std::string& rel) { outputs.push_back(rel); return dir / rel; };
    result.state.save(emit("checkpoint.vgda"));
    write_text_file(emit("trace.csv"), harness::trace_to_csv(result.state.trace));
    std::vector<Image> pred, gt;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < problem.heldout.size(); ++i) {
        const std::string name = cam_name(problem.heldout[i].camera);
        pred.push_back(round_to_float(result.heldout_renders[i]));
        gt.push_back(round_to_float(problem.heldout[i].image));
        names.push_back(name);
        write_pfm(emit("pred/" + name + ".pfm"), pred.back());
        write_pfm(emit("gt/" + name + ".pfm"), gt.back());
    }
    const harness::MetricTable table = harness::evaluate(pred, gt, names);
    write_text_file(emit("metrics.tsv"), table.to_tsv());
    write_text_file(emit("metrics_init.tsv"), result.initial_metrics->to_tsv());
    write_manifest(dir / "manifest.json", r, ".", outputs);

    out << "iterations " << result.state.iteration << "\n"
        << "final_loss " << harness::format_exact(result.final_objective.total) << "\n"
        << "heldout_psnr_init " << harness::format_exact(result.initial_metrics->mean().psnr) << "\n"
        << "heldout_psnr_final " << harness::format_exact(table.mean().psnr) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto pred_files = list_images(a.pred);
    const auto gt_files = list_images(a.gt);
    if (pred_files.size() != gt_files.size()) {
        throw ValidationError("eval: " + std::to_string(pred_files.size()) + " predictions in " +
                              a.pred + " but " + std::to_string(gt_files.size()) +
                              " ground-truth images in " + a.gt);
    }
    std::vector<Image> pred, gt;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < pred_files.size(); ++i) {
        pred.push_back(read_image(pred_files[i]));
        gt.push_back(read_image(gt_files[i]));
        names.push_back(pred_files[i].stem().string());
    }
    const harness::MetricTable table = harness::evaluate(pred, gt, names);
    const std::string text = table.to_tsv();
    out << text;
    if (!a.out.empty()) {
        write_text_file(a.out, text);
        Resolved r{"eval", {}, {}};
        r.set("pred", a.pred);
        r.set("gt", a.gt);
        const std::string name = fs::path(a.out).filename().string();
        write_manifest(a.out + ".manifest.json", r, name, {name});
    }
    return kExitOk;
}

// ---------------------------------------------------------------- replay

int cmd_replay(const std::string& manifest, const std::string& out_override, std::ostream& out,
               std::ostream& err) {
    const json m = read_json_file(manifest);
    if (!m.contains("command") || !m.contains("argv") || !m.contains("output") ||
        !m["argv"].is_array()) {
        throw ValidationError(manifest + ": not a vgd run manifest (needs command, argv, output)");
    }
    std::vector<std::string> args{m["command"].get<std::string>()};
    for (const auto& t : m["argv"]) {
        args.push_back(t.get<std::string>());
    }
    const fs::path target = out_override.empty()
                                ? fs::path(manifest).parent_path() / m["output"].get<std::string>()
                                : fs::path(out_override);
    args.push_back("--out");
    args.push_back(target.lexically_normal().string());
    return run_cli(args, out, err);
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"vgd: Gaussian splatting novel-view toolkit"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", VGD_VERSION);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic rig, scene and ground-truth views");
    s->add_option("--out", synth.out, "output directory")->required();
    s->add_option("--seed", synth.seed, "scene seed");
    s->add_option("--cameras", synth.cameras, "camera count");
    s->add_option("--spacing", synth.spacing, "yaw spacing in degrees (default 360 / cameras)");
    s->add_option("--fov", synth.fov, "horizontal field of view in degrees");
    s->add_option("--width", synth.width, "image width");
    s->add_option("--height", synth.height, "image height");
    s->add_option("--radius", synth.radius, "mounting radius in meters");
    s->add_option("--gaussians", synth.gaussians, "scene primitive count");
    s->add_option("--layout", synth.layout, "scene layout")->check(CLI::IsMember({"box", "corridor"}));
    s->add_option("--sh-degree", synth.sh_degree, "SH degree of the scene")->check(CLI::Range(0, 3));
    s->add_option("--noise-std", synth.noise_std, "teacher log-normal depth noise");
    s->add_option("--fill-depth", synth.fill_depth, "teacher depth where nothing is hit");
    s->add_option("--target-offset", synth.target_offset, "forward shift of the target rig (m)");
    s->add_option("--heldout-offset", synth.heldout_offset, "forward shift of the held-out rig (m)");
    add_common(s, synth.common);

    RenderArgs rend;
    auto* r = app.add_subcommand("render", "render one camera of a scene");
    r->add_option("--scene", rend.scene, "scene file")->required();
    r->add_option("--rig", rend.rig, "rig file")->required();
    r->add_option("--camera", rend.camera, "camera id");
    r->add_option("--out", rend.out, "output image (.ppm or .pfm)")->required();
    r->add_flag("--oracle", rend.oracle, "use the brute-force reference renderer");
    r->add_option("--tile-size", rend.tile_size, "tile side in pixels");
    r->add_option("--sh-degree", rend.sh_degree, "SH degree (default: the scene's)");
    add_common(r, rend.common);

    DiffArgs diff;
    auto* d = app.add_subcommand("diff", "max absolute difference between two images");
    d->add_option("a", diff.a, "first image")->required();
    d->add_option("b", diff.b, "second image")->required();
    d->add_option("--tol", diff.tol, "pass threshold");
    d->add_option("--out", diff.out, "optional report file");

    GradcheckArgs gc;
    auto* g = app.add_subcommand("gradcheck", "finite-difference check of all analytic gradients");
    g->add_option("--seed", gc.seed, "trial seed");
    g->add_option("--trials", gc.trials, "random problems");
    g->add_option("--size", gc.size, "render side in pixels");
    g->add_option("--max-gaussians", gc.max_gaussians, "Gaussians per render trial");
    g->add_option("--out", gc.out, "optional report file");
    add_common(g, gc.common);

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "fit per-pixel Gaussians to a synth directory");
    f->add_option("--data", fit.data, "synth output directory")->required();
    f->add_option("--out", fit.out, "output directory")->required();
    f->add_option("--iterations", fit.iterations, "total iterations (including resumed ones)");
    f->add_option("--lr", fit.lr, "step size of raw parameters");
    f->add_option("--lr-depth", fit.lr_depth, "step size of log-depth");
    f->add_option("--half-life", fit.half_life, "step-size half-life in iterations (0: constant)");
    f->add_option("--init-opacity", fit.init_opacity, "initial opacity");
    f->add_flag("--no-monotone", fit.no_monotone, "accept steps that raise the loss");
    f->add_option("--sh-degree", fit.sh_degree, "SH degree of fitted Gaussians")->check(CLI::Range(0, 3));
    f->add_option("--resume", fit.resume, "checkpoint to continue from");
    add_common(f, fit.common);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "PSNR/SSIM table of predicted vs ground-truth images");
    e->add_option("--pred", ev.pred, "prediction directory")->required();
    e->add_option("--gt", ev.gt, "ground-truth directory")->required();
    e->add_option("--out", ev.out, "optional table file");

    std::string manifest;
    std::string replay_out;
    auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    rp->add_option("manifest", manifest, "manifest file")->required();
    rp->add_option("--out", replay_out, "output location (default: where the manifest was written)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitBadArgs;
    }

    try {
        if (s->parsed()) return cmd_synth(synth, out);
        if (r->parsed()) return cmd_render(rend, out);
        if (d->parsed()) return cmd_diff(diff, out);
        if (g->parsed()) return cmd_gradcheck(gc, out);
        if (f->parsed()) return cmd_fit(fit, out);
        if (e->parsed()) return cmd_eval(ev, out);
        if (rp->parsed()) return cmd_replay(manifest, replay_out, out, err);
    } catch (const BadArguments& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitBadArgs;
    } catch (const NumericalError& ex) {
        err << "numerical error: " << ex.what() << "\n";
        return kExitNumerical;
    } catch (const ValidationError& ex) {
        err << "validation error: " << ex.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitValidation;
    }
    return kExitBadArgs;
}

} // namespace vgd::cli
