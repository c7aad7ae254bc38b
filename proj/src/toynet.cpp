// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/toynet.hpp"

#include "vgd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vgd::toynet {

namespace {

NamedArray make_array(std::vector<std::uint64_t> shape, double fill = 0.0) {
    NamedArray a;
    a.shape = std::move(shape);
    a.data.assign(a.element_count(), fill);
    return a;
}

NamedArray random_array(std::vector<std::uint64_t> shape, std::mt19937_64& rng, double gain) {
    NamedArray a = make_array(std::move(shape));
    std::normal_distribution<double> normal(0.0, gain);
    for (double& v : a.data) {
        v = normal(rng);
    }
    return a;
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
as_matrix(const NamedArray& a) {
    return {a.data.data(), static_cast<Eigen::Index>(a.shape.at(0)),
            static_cast<Eigen::Index>(a.shape.at(1))};
}

Eigen::Map<const Eigen::RowVectorXd> as_row(const NamedArray& a) {
    return {a.data.data(), static_cast<Eigen::Index>(a.data.size())};
}

double softplus(double x) {
    const double v = x > 30.0 ? x : std::log1p(std::exp(x));
    return std::max(v, 1e-300);
}

// Per-pixel linear map over channels; bias may be null.
Image conv1x1(const Image& in, const NamedArray& w, const NamedArray* b) {
    const auto W = as_matrix(w);
    if (W.rows() != in.channels()) {
        throw ValidationError("conv1x1: channel mismatch");
    }
    Image out(in.width(), in.height(), static_cast<int>(W.cols()));
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            auto src = in.pixel(y, x);
            Eigen::Map<const Eigen::RowVectorXd> v(src.data(), in.channels());
            Eigen::RowVectorXd r = v * W;
            if (b) {
                r += as_row(*b);
            }
            auto dst = out.pixel(y, x);
            std::copy(r.data(), r.data() + r.size(), dst.begin());
        }
    }
    return out;
}

// 3x3 convolution with zero padding; weight rows ordered (dy, dx, c_in).
Image conv3x3(const Image& in, const NamedArray& w, const NamedArray& b) {
    const auto Wm = as_matrix(w);
    const int cin = in.channels();
    if (Wm.rows() != 9 * cin) {
        throw ValidationError("conv3x3: channel mismatch");
    }
    const int cout = static_cast<int>(Wm.cols());
    Image out(in.width(), in.height(), cout);
    Eigen::RowVectorXd patch(9 * cin);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            patch.setZero();
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int sy = y + dy, sx = x + dx;
                    if (sy < 0 || sx < 0 || sy >= in.height() || sx >= in.width()) {
                        continue;
                    }
                    auto src = in.pixel(sy, sx);
                    const int base = ((dy + 1) * 3 + (dx + 1)) * cin;
                    for (int c = 0; c < cin; ++c) {
                        patch[base + c] = src[c];
                    }
                }
            }
            Eigen::RowVectorXd r = patch * Wm + as_row(b);
            auto dst = out.pixel(y, x);
            std::copy(r.data(), r.data() + cout, dst.begin());
        }
    }
    return out;
}

Image relu(Image img) {
    for (double& v : img.data()) {
        v = std::max(v, 0.0);
    }
    return img;
}

Image concat(const Image& a, const Image& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw ValidationError("concat: spatial size mismatch");
    }
    Image out(a.width(), a.height(), a.channels() + b.channels());
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            auto dst = out.pixel(y, x);
            auto pa = a.pixel(y, x);
            auto pb = b.pixel(y, x);
            std::copy(pa.begin(), pa.end(), dst.begin());
            std::copy(pb.begin(), pb.end(), dst.begin() + a.channels());
        }
    }
    return out;
}

Image avgpool2(const Image& in) {
    Image out(in.width() / 2, in.height() / 2, in.channels());
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            for (int c = 0; c < in.channels(); ++c) {
                out.at(y, x, c) = 0.25 * (in.at(2 * y, 2 * x, c) + in.at(2 * y, 2 * x + 1, c) +
                                          in.at(2 * y + 1, 2 * x, c) + in.at(2 * y + 1, 2 * x + 1, c));
            }
        }
    }
    return out;
}

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const NamedArray& gamma,
                           const NamedArray& beta) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    const auto g = as_row(gamma);
    const auto b = as_row(beta);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        out.row(r) = ((x.row(r).array() - mean) / std::sqrt(var + 1e-6)).matrix();
        out.row(r) = out.row(r).cwiseProduct(g) + b;
    }
    return out;
}

} // namespace

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
    Eigen::MatrixXd out(scores.rows(), scores.cols());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const double m = scores.row(r).maxCoeff();
        out.row(r) = (scores.row(r).array() - m).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

Image resize_bilinear(const Image& src, int width, int height) {
    if (src.width() == width && src.height() == height) {
        return src;
    }
    Image out(width, height, src.channels());
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, src.height() - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, src.width() - 1);
            const double wx = fx - x0;
            for (int c = 0; c < src.channels(); ++c) {
                const double top = (1 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
                const double bot = (1 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
                out.at(y, x, c) = (1 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

void NetConfig::validate() const {
    if (patch < 1 || channels < 1 || blocks < 0 || heads < 1 || head_channels < 1 ||
        srm_channels < 1 || max_cameras < 1) {
        throw ValidationError("NetConfig: sizes must be positive");
    }
    if (channels % heads != 0) {
        throw ValidationError("NetConfig: channels must be divisible by heads");
    }
    if (sh_degree < 0 || sh_degree > 3) {
        throw ValidationError("NetConfig: sh_degree must be in [0, 3]");
    }
}

Network::Network(const NetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);
    const double g = cfg_.init_gain;
    const std::uint64_t C = cfg_.channels;
    const std::uint64_t D = cfg_.head_channels;
    const std::uint64_t S = cfg_.srm_channels;
    const std::uint64_t P = static_cast<std::uint64_t>(cfg_.patch) * cfg_.patch * 3;
    const std::uint64_t K = 3 * sh_basis_count(cfg_.sh_degree);

    // Creation order fixes the random stream; keep it stable.
    params_["patch_embed.weight"] = random_array({P, C}, rng, g);
    params_["patch_embed.bias"] = make_array({C});
    params_["camera_tokens"] = random_array({static_cast<std::uint64_t>(cfg_.max_cameras), C}, rng, g);
    for (int b = 0; b < cfg_.blocks; ++b) {
        for (const char* kind : {"global", "frame"}) {
            const std::string p = "blocks." + std::to_string(b) + "." + kind + ".";
            params_[p + "ln.gamma"] = make_array({C}, 1.0);
            params_[p + "ln.beta"] = make_array({C});
            for (const char* m : {"wq", "wk", "wv", "wo"}) {
                params_[p + m] = random_array({C, C}, rng, g);
            }
        }
    }
    params_["depth.reassemble.weight"] = random_array({C, D}, rng, g);
    params_["depth.reassemble.bias"] = make_array({D});
    for (int k = 1; k < 4; ++k) {
        const std::string p = "depth.stage" + std::to_string(k) + ".";
        params_[p + "weight"] = random_array({9 * D, D}, rng, g);
        params_[p + "bias"] = make_array({D});
    }
    params_["depth.out.weight"] = random_array({D, 1}, rng, g);
    params_["depth.out.bias"] = make_array({1});

    params_["gs.reassemble.weight"] = random_array({C, D}, rng, g);
    params_["gs.reassemble.bias"] = make_array({D});
    for (int k = 0; k < 4; ++k) {
        const std::string p = "gs.fuse" + std::to_string(k) + ".";
        params_[p + "weight"] = random_array({2 * D, D}, rng, g);
        params_[p + "bias"] = make_array({D});
        if (k > 0) {
            const std::string s = "gs.stage" + std::to_string(k) + ".";
            params_[s + "weight"] = random_array({9 * D, D}, rng, g);
            params_[s + "bias"] = make_array({D});
        }
    }
    params_["gs.rotation.weight"] = random_array({D, 4}, rng, g);
    params_["gs.rotation.bias"] = make_array({4});
    params_["gs.rotation.bias"].data[0] = 1.0; // identity quaternion at zero features
    params_["gs.opacity.weight"] = random_array({D, 1}, rng, g);
    params_["gs.opacity.bias"] = make_array({1});
    params_["gs.scale.weight"] = random_array({D, 3}, rng, g);
    params_["gs.scale.bias"] = make_array({3});
    params_["gs.sh.weight"] = random_array({D, K}, rng, g);
    params_["gs.sh.bias"] = make_array({K});

    params_["srm.enc0.weight"] = random_array({9 * 3, S}, rng, g);
    params_["srm.enc0.bias"] = make_array({S});
    params_["srm.enc1.weight"] = random_array({9 * S, S}, rng, g);
    params_["srm.enc1.bias"] = make_array({S});
    params_["srm.fuse.weight"] = random_array({S + 8 * D, S}, rng, g);
    params_["srm.fuse.bias"] = make_array({S});
    params_["srm.dec.weight"] = random_array({9 * 2 * S, S}, rng, g);
    params_["srm.dec.bias"] = make_array({S});
    params_["srm.out.weight"] = random_array({S, 3}, rng, g);
}

Network::Network(const NetConfig& cfg, ArrayStore params) : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    const Network reference(cfg_);
    for (const auto& [name, array] : reference.params_) {
        auto it = params_.find(name);
        if (it == params_.end() || it->second.shape != array.shape) {
            throw ValidationError("toynet checkpoint: missing or mis-shaped parameter '" + name + "'");
        }
    }
}

NamedArray& Network::parameter(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw ValidationError("toynet: unknown parameter " + name);
    }
    return it->second;
}

const NamedArray& Network::parameter(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw ValidationError("toynet: unknown parameter " + name);
    }
    return it->second;
}

TokenTensor Network::patchify(const std::vector<Image>& images,
                              const std::vector<int>& camera_ids) const {
    if (images.empty()) {
        throw ValidationError("patchify: no images");
    }
    if (camera_ids.size() != images.size()) {
        throw ValidationError("patchify: one camera id per image required");
    }
    const int W = images[0].width();
    const int H = images[0].height();
    const int p = cfg_.patch;
    if (W % p != 0 || H % p != 0) {
        throw ValidationError("patchify: patch size must divide the image size");
    }
    const auto embed = as_matrix(parameter("patch_embed.weight"));
    const auto bias = as_row(parameter("patch_embed.bias"));
    const auto cams = as_matrix(parameter("camera_tokens"));

    TokenTensor t;
    t.grid_w = W / p;
    t.grid_h = H / p;
    const int tokens = t.grid_w * t.grid_h + 1;
    Eigen::RowVectorXd flat(p * p * 3);
    for (std::size_t f = 0; f < images.size(); ++f) {
        const Image& img = images[f];
        if (img.width() != W || img.height() != H || img.channels() != 3) {
            throw ValidationError("patchify: all frames must be H x W x 3 of equal size");
        }
        if (camera_ids[f] < 0 || camera_ids[f] >= cfg_.max_cameras) {
            throw ValidationError("patchify: camera id outside the camera token table");
        }
        Eigen::MatrixXd frame(tokens, cfg_.channels);
        frame.row(0) = cams.row(camera_ids[f]);
        for (int gy = 0; gy < t.grid_h; ++gy) {
            for (int gx = 0; gx < t.grid_w; ++gx) {
                int i = 0;
                for (int dy = 0; dy < p; ++dy) {
                    for (int dx = 0; dx < p; ++dx) {
                        for (int c = 0; c < 3; ++c) {
                            flat[i++] = img.at(gy * p + dy, gx * p + dx, c);
                        }
                    }
                }
                frame.row(1 + gy * t.grid_w + gx) = flat * embed + bias;
            }
        }
        t.frames.push_back(std::move(frame));
    }
    return t;
}

TokenTensor Network::attention(const TokenTensor& t, const std::string& prefix, bool global,
                               AttentionProbe* probe) const {
    const auto wq = as_matrix(parameter(prefix + "wq"));
    const auto wk = as_matrix(parameter(prefix + "wk"));
    const auto wv = as_matrix(parameter(prefix + "wv"));
    const auto wo = as_matrix(parameter(prefix + "wo"));
    const auto& gamma = parameter(prefix + "ln.gamma");
    const auto& beta = parameter(prefix + "ln.beta");
    const int H = cfg_.heads;
    const int dh = cfg_.channels / H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    auto attend = [&](const Eigen::MatrixXd& x) {
        const Eigen::MatrixXd xn = layer_norm(x, gamma, beta);
        const Eigen::MatrixXd q = xn * wq;
        const Eigen::MatrixXd k = xn * wk;
        const Eigen::MatrixXd v = xn * wv;
        Eigen::MatrixXd heads(x.rows(), cfg_.channels);
        for (int h = 0; h < H; ++h) {
            const Eigen::MatrixXd a =
                softmax_rows(q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() * scale);
            heads.middleCols(h * dh, dh) = a * v.middleCols(h * dh, dh);
            if (probe) {
                probe->weights.push_back(a);
            }
        }
        return Eigen::MatrixXd(x + heads * wo);
    };

    TokenTensor out = t;
    if (!global) {
        for (auto& frame : out.frames) {
            frame = attend(frame);
        }
        return out;
    }
    const int P = t.token_count();
    Eigen::MatrixXd all(static_cast<Eigen::Index>(t.frame_count()) * P, t.channel_count());
    for (int f = 0; f < t.frame_count(); ++f) {
        all.middleRows(static_cast<Eigen::Index>(f) * P, P) = t.frames[f];
    }
    const Eigen::MatrixXd joined = attend(all);
    for (int f = 0; f < t.frame_count(); ++f) {
        out.frames[f] = joined.middleRows(static_cast<Eigen::Index>(f) * P, P);
    }
    return out;
}

TokenTensor Network::frame_attention(const TokenTensor& t, int block, AttentionProbe* probe) const {
    return attention(t, "blocks." + std::to_string(block) + ".frame.", false, probe);
}

TokenTensor Network::global_attention(const TokenTensor& t, int block, AttentionProbe* probe) const {
    return attention(t, "blocks." + std::to_string(block) + ".global.", true, probe);
}

TokenTensor Network::encode(const std::vector<Image>& images,
                            const std::vector<int>& camera_ids) const {
    TokenTensor t = patchify(images, camera_ids);
    for (int b = 0; b < cfg_.blocks; ++b) {
        t = frame_attention(global_attention(t, b), b);
    }
    return t;
}

namespace {

Image token_grid(const Eigen::MatrixXd& frame, int grid_w, int grid_h) {
    Image grid(grid_w, grid_h, static_cast<int>(frame.cols()));
    for (int gy = 0; gy < grid_h; ++gy) {
        for (int gx = 0; gx < grid_w; ++gx) {
            auto dst = grid.pixel(gy, gx);
            const auto row = frame.row(1 + gy * grid_w + gx);
            for (Eigen::Index c = 0; c < row.size(); ++c) {
                dst[c] = row[c];
            }
        }
    }
    return grid;
}

} // namespace

DepthHeadOutput Network::dpt_depth_head(const TokenTensor& t, int image_w, int image_h) const {
    DepthHeadOutput out;
    for (const auto& frame : t.frames) {
        MultiScaleFeatures f;
        const Image grid = token_grid(frame, t.grid_w, t.grid_h);
        f[0] = relu(conv1x1(grid, parameter("depth.reassemble.weight"),
                            &parameter("depth.reassemble.bias")));
        for (int k = 1; k < 4; ++k) {
            const std::string p = "depth.stage" + std::to_string(k) + ".";
            const Image up = resize_bilinear(f[k - 1], 2 * f[k - 1].width(), 2 * f[k - 1].height());
            f[k] = relu(conv3x3(up, parameter(p + "weight"), parameter(p + "bias")));
        }
        const Image full = resize_bilinear(f[3], image_w, image_h);
        const Image logits = conv1x1(full, parameter("depth.out.weight"), &parameter("depth.out.bias"));
        DisparityMap disp = make_disparity_map(image_w, image_h, 0.0);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            disp.values.data()[i] = softplus(logits.data()[i]);
        }
        out.disparity.push_back(std::move(disp));
        out.features.push_back(std::move(f));
    }
    return out;
}

GaussianHeadOutput Network::dpt_gs_head(const std::vector<MultiScaleFeatures>& f_d,
                                        const TokenTensor& t, int image_w, int image_h) const {
    if (static_cast<int>(f_d.size()) != t.frame_count()) {
        throw ValidationError("dpt_gs_head: one depth feature set per frame required");
    }
    GaussianHeadOutput out;
    const int K = 3 * sh_basis_count(cfg_.sh_degree);
    for (int fi = 0; fi < t.frame_count(); ++fi) {
        const MultiScaleFeatures& depth_levels = f_d[fi];
        MultiScaleFeatures f;
        const Image grid = token_grid(t.frames[fi], t.grid_w, t.grid_h);
        const Image g0 =
            relu(conv1x1(grid, parameter("gs.reassemble.weight"), &parameter("gs.reassemble.bias")));
        for (int k = 0; k < 4; ++k) {
            Image own;
            if (k == 0) {
                own = g0;
            } else {
                const std::string s = "gs.stage" + std::to_string(k) + ".";
                const Image up = resize_bilinear(f[k - 1], 2 * f[k - 1].width(), 2 * f[k - 1].height());
                own = relu(conv3x3(up, parameter(s + "weight"), parameter(s + "bias")));
            }
            if (depth_levels[k].width() != own.width() || depth_levels[k].height() != own.height() ||
                depth_levels[k].channels() != own.channels()) {
                throw ValidationError("dpt_gs_head: depth feature level " + std::to_string(k) +
                                      " does not match the Gaussian head level");
            }
            const std::string p = "gs.fuse" + std::to_string(k) + ".";
            f[k] = relu(conv1x1(concat(own, depth_levels[k]), parameter(p + "weight"),
                                &parameter(p + "bias")));
        }
        const Image fg = resize_bilinear(f[3], image_w, image_h);
        const Image rot = conv1x1(fg, parameter("gs.rotation.weight"), &parameter("gs.rotation.bias"));
        const Image opa = conv1x1(fg, parameter("gs.opacity.weight"), &parameter("gs.opacity.bias"));
        const Image scl = conv1x1(fg, parameter("gs.scale.weight"), &parameter("gs.scale.bias"));
        const Image sh = conv1x1(fg, parameter("gs.sh.weight"), &parameter("gs.sh.bias"));
        RawParamMap raw(image_w, image_h, cfg_.sh_degree);
        for (int y = 0; y < image_h; ++y) {
            for (int x = 0; x < image_w; ++x) {
                auto px = raw.pixel(y, x);
                for (int i = 0; i < 4; ++i) {
                    px[kRawRotation + i] = rot.at(y, x, i);
                }
                px[kRawOpacity] = opa.at(y, x, 0);
                for (int i = 0; i < 3; ++i) {
                    px[kRawScale + i] = scl.at(y, x, i);
                }
                for (int i = 0; i < K; ++i) {
                    px[kRawSh + i] = sh.at(y, x, i);
                }
            }
        }
        out.raw.push_back(std::move(raw));
        out.features.push_back(std::move(f));
    }
    return out;
}

RefineOutput Network::srm_refine_detailed(const Image& render, const MultiScaleFeatures& f_d,
                                          const MultiScaleFeatures& f_gs) const {
    if (render.channels() != 3) {
        throw ValidationError("srm_refine: render must have 3 channels");
    }
    const int W = render.width();
    const int H = render.height();
    if (W < 2 || H < 2) {
        throw ValidationError("srm_refine: render too small");
    }
    const Image e0 = relu(conv3x3(render, parameter("srm.enc0.weight"), parameter("srm.enc0.bias")));
    const Image e1 =
        relu(conv3x3(avgpool2(e0), parameter("srm.enc1.weight"), parameter("srm.enc1.bias")));
    Image fused = e1;
    for (int k = 0; k < 4; ++k) {
        fused = concat(fused, resize_bilinear(f_d[k], e1.width(), e1.height()));
        fused = concat(fused, resize_bilinear(f_gs[k], e1.width(), e1.height()));
    }
    fused = relu(conv1x1(fused, parameter("srm.fuse.weight"), &parameter("srm.fuse.bias")));
    RefineOutput out;
    out.hidden = relu(conv3x3(concat(resize_bilinear(fused, W, H), e0), parameter("srm.dec.weight"),
                              parameter("srm.dec.bias")));
    out.residual = conv1x1(out.hidden, parameter("srm.out.weight"), nullptr);
    out.image = Image(W, H, 3);
    for (std::size_t i = 0; i < out.image.size(); ++i) {
        out.image.data()[i] = std::clamp(render.data()[i] + out.residual.data()[i], 0.0, 1.0);
    }
    return out;
}

Image Network::srm_refine(const Image& render, const MultiScaleFeatures& f_d,
                          const MultiScaleFeatures& f_gs) const {
    return srm_refine_detailed(render, f_d, f_gs).image;
}

void Network::save(const std::filesystem::path& path) const {
    ArrayStore out = params_;
    auto scalar = [&](const std::string& name, double v) { out["config." + name] = {{1}, {v}}; };
    scalar("patch", cfg_.patch);
    scalar("channels", cfg_.channels);
    scalar("blocks", cfg_.blocks);
    scalar("heads", cfg_.heads);
    scalar("head_channels", cfg_.head_channels);
    scalar("srm_channels", cfg_.srm_channels);
    scalar("sh_degree", cfg_.sh_degree);
    scalar("max_cameras", cfg_.max_cameras);
    // Seeds beyond 2^53 do not survive a double; the weights themselves are stored.
    scalar("seed", static_cast<double>(cfg_.seed));
    scalar("init_gain", cfg_.init_gain);
    write_arrays(path, out);
}

Network Network::load(const std::filesystem::path& path) {
    ArrayStore in = read_arrays(path);
    auto scalar = [&](const std::string& name) {
        const auto& a = require_array(in, "config." + name, {1});
        return a.data[0];
    };
    NetConfig cfg;
    cfg.patch = static_cast<int>(scalar("patch"));
    cfg.channels = static_cast<int>(scalar("channels"));
    cfg.blocks = static_cast<int>(scalar("blocks"));
    cfg.heads = static_cast<int>(scalar("heads"));
    cfg.head_channels = static_cast<int>(scalar("head_channels"));
    cfg.srm_channels = static_cast<int>(scalar("srm_channels"));
    cfg.sh_degree = static_cast<int>(scalar("sh_degree"));
    cfg.max_cameras = static_cast<int>(scalar("max_cameras"));
    cfg.seed = static_cast<std::uint64_t>(scalar("seed"));
    cfg.init_gain = scalar("init_gain");
    for (auto it = in.begin(); it != in.end();) {
        it = it->first.rfind("config.", 0) == 0 ? in.erase(it) : std::next(it);
    }
    return Network(cfg, std::move(in));
}

PipelineOutput forward_pipeline(const Network& net, const std::vector<Image>& images,
                                const std::vector<Camera>& cameras, const Camera& target,
                                int feature_frame, const RenderConfig& render_cfg,
                                double baseline) {
    if (images.size() != cameras.size()) {
        throw ValidationError("forward_pipeline: one camera per image required");
    }
    if (feature_frame < 0 || feature_frame >= static_cast<int>(images.size())) {
        throw ValidationError("forward_pipeline: feature_frame out of range");
    }
    std::vector<int> ids;
    for (const auto& c : cameras) {
        ids.push_back(c.id);
    }
    const int W = images[0].width();
    const int H = images[0].height();
    const TokenTensor tokens = net.encode(images, ids);
    PipelineOutput out;
    out.cloud.sh_degree = net.config().sh_degree;
    out.depth = net.dpt_depth_head(tokens, W, H);
    out.gaussians = net.dpt_gs_head(out.depth.features, tokens, W, H);
    for (std::size_t f = 0; f < images.size(); ++f) {
        const DepthMap depth =
            disparity_to_depth(out.depth.disparity[f], cameras[f].intrinsics.fx, baseline);
        append(out.cloud, lift(depth, out.gaussians.raw[f], cameras[f].intrinsics, cameras[f].pose,
                               cameras[f].id));
    }
    out.render = render(out.cloud, target, render_cfg);
    out.novel = net.srm_refine(out.render.color, out.depth.features[feature_frame],
                               out.gaussians.features[feature_frame]);
    return out;
}

} // namespace vgd::toynet
