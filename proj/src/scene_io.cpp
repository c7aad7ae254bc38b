// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/scene_io.hpp"

#include "vgd/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vgd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& source, const std::string& pointer,
                              const std::string& what) {
    throw ValidationError(source + ": field " + pointer + ": " + what);
}

const json& member(const json& obj, const char* key, const std::string& source,
                   const std::string& pointer) {
    if (!obj.is_object()) {
        field_error(source, pointer, "expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        field_error(source, pointer + "/" + key, "missing");
    }
    return *it;
}

double number(const json& v, const std::string& source, const std::string& pointer) {
    if (!v.is_number()) {
        field_error(source, pointer, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        field_error(source, pointer, "must be finite");
    }
    return d;
}

int integer(const json& v, const std::string& source, const std::string& pointer) {
    if (!v.is_number_integer()) {
        field_error(source, pointer, "expected an integer");
    }
    return v.get<int>();
}

std::vector<double> numbers(const json& v, std::size_t count, const std::string& source,
                            const std::string& pointer) {
    if (!v.is_array() || (count != 0 && v.size() != count)) {
        field_error(source, pointer,
                    count ? "expected an array of " + std::to_string(count) + " numbers"
                          : "expected an array");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(number(v[i], source, pointer + "/" + std::to_string(i)));
    }
    return out;
}

void check_format(const json& doc, const char* expected, const std::string& source) {
    const json& fmt = member(doc, "format", source, "");
    if (!fmt.is_string() || fmt.get<std::string>() != expected) {
        field_error(source, "/format", std::string("expected \"") + expected + "\"");
    }
}

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
}

} // namespace

json conventions_block() {
    return {{"quaternion", "wxyz"},
            {"pose", "camera_to_world"},
            {"camera_frame", "x right, y down, z forward"},
            {"pixel_center", "col + 0.5, row + 0.5"}};
}

json rig_to_json(const std::vector<Camera>& cameras) {
    json cams = json::array();
    for (const auto& c : cameras) {
        const Eigen::Vector4d q = c.pose.wxyz();
        cams.push_back({{"id", c.id},
                        {"fx", c.intrinsics.fx},
                        {"fy", c.intrinsics.fy},
                        {"cx", c.intrinsics.cx},
                        {"cy", c.intrinsics.cy},
                        {"width", c.intrinsics.width},
                        {"height", c.intrinsics.height},
                        {"quaternion", {q[0], q[1], q[2], q[3]}},
                        {"translation", {c.pose.translation.x(), c.pose.translation.y(),
                                         c.pose.translation.z()}},
                        {"convention", "camera_to_world"}});
    }
    return {{"format", "vgd-rig"}, {"version", 1}, {"conventions", conventions_block()},
            {"cameras", cams}};
}

std::vector<Camera> rig_from_json(const json& doc, const std::string& source) {
    check_format(doc, "vgd-rig", source);
    const json& cams = member(doc, "cameras", source, "");
    if (!cams.is_array()) {
        field_error(source, "/cameras", "expected an array");
    }
    std::vector<Camera> out;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const std::string p = "/cameras/" + std::to_string(i);
        const json& c = cams[i];
        Camera cam;
        cam.id = integer(member(c, "id", source, p), source, p + "/id");
        cam.intrinsics.fx = number(member(c, "fx", source, p), source, p + "/fx");
        cam.intrinsics.fy = number(member(c, "fy", source, p), source, p + "/fy");
        cam.intrinsics.cx = number(member(c, "cx", source, p), source, p + "/cx");
        cam.intrinsics.cy = number(member(c, "cy", source, p), source, p + "/cy");
        cam.intrinsics.width = integer(member(c, "width", source, p), source, p + "/width");
        cam.intrinsics.height = integer(member(c, "height", source, p), source, p + "/height");
        const json& conv = member(c, "convention", source, p);
        if (!conv.is_string() || conv.get<std::string>() != "camera_to_world") {
            field_error(source, p + "/convention", "expected \"camera_to_world\"");
        }
        const auto q = numbers(member(c, "quaternion", source, p), 4, source, p + "/quaternion");
        const auto t = numbers(member(c, "translation", source, p), 3, source, p + "/translation");
        try {
            cam.intrinsics.validate();
        } catch (const ValidationError& e) {
            field_error(source, p, e.what());
        }
        try {
            cam.pose = Pose::from_wxyz({q[0], q[1], q[2], q[3]}, {t[0], t[1], t[2]});
        } catch (const ValidationError& e) {
            field_error(source, p + "/quaternion", e.what());
        }
        for (const auto& prev : out) {
            if (prev.id == cam.id) {
                field_error(source, p + "/id", "duplicate camera id " + std::to_string(cam.id));
            }
        }
        out.push_back(cam);
    }
    return out;
}

json scene_to_json(const GaussianCloud& cloud) {
    json gs = json::array();
    for (const auto& g : cloud.primitives) {
        gs.push_back({{"mean", {g.mean.x(), g.mean.y(), g.mean.z()}},
                      {"rotation", {g.rotation[0], g.rotation[1], g.rotation[2], g.rotation[3]}},
                      {"scale", {g.scale.x(), g.scale.y(), g.scale.z()}},
                      {"opacity", g.opacity},
                      {"sh", g.sh}});
    }
    return {{"format", "vgd-scene"}, {"version", 1}, {"conventions", conventions_block()},
            {"sh_degree", cloud.sh_degree}, {"gaussians", gs}};
}

GaussianCloud scene_from_json(const json& doc, const std::string& source) {
    check_format(doc, "vgd-scene", source);
    GaussianCloud cloud;
    cloud.sh_degree = integer(member(doc, "sh_degree", source, ""), source, "/sh_degree");
    if (cloud.sh_degree < 0 || cloud.sh_degree > 3) {
        field_error(source, "/sh_degree", "must be in [0, 3]");
    }
    const std::size_t sh_count = 3 * sh_basis_count(cloud.sh_degree);
    const json& gs = member(doc, "gaussians", source, "");
    if (!gs.is_array()) {
        field_error(source, "/gaussians", "expected an array");
    }
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const std::string p = "/gaussians/" + std::to_string(i);
        const json& g = gs[i];
        GaussianPrimitive prim;
        const auto m = numbers(member(g, "mean", source, p), 3, source, p + "/mean");
        const auto r = numbers(member(g, "rotation", source, p), 4, source, p + "/rotation");
        const auto s = numbers(member(g, "scale", source, p), 3, source, p + "/scale");
        prim.mean = {m[0], m[1], m[2]};
        prim.rotation = {r[0], r[1], r[2], r[3]};
        prim.scale = {s[0], s[1], s[2]};
        prim.opacity = number(member(g, "opacity", source, p), source, p + "/opacity");
        prim.sh = numbers(member(g, "sh", source, p), sh_count, source, p + "/sh");
        GaussianCloud single;
        single.sh_degree = cloud.sh_degree;
        single.primitives.push_back(prim);
        try {
            single.validate();
        } catch (const ValidationError& e) {
            field_error(source, p, e.what());
        }
        cloud.primitives.push_back(std::move(prim));
    }
    return cloud;
}

json read_json_file(const fs::path& path) {
    const std::string text = read_all(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + pos, '\n');
        const auto last_nl = text.rfind('\n', pos == 0 ? 0 : pos - 1);
        const auto column = last_nl == std::string::npos ? pos + 1 : pos - last_nl;
        throw ValidationError(path.string() + ": line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ": malformed JSON");
    }
}

void write_json_file(const fs::path& path, const json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

void write_rig(const fs::path& path, const std::vector<Camera>& cameras) {
    write_json_file(path, rig_to_json(cameras));
}

std::vector<Camera> read_rig(const fs::path& path) {
    return rig_from_json(read_json_file(path), path.string());
}

void write_scene(const fs::path& path, const GaussianCloud& cloud) {
    write_json_file(path, scene_to_json(cloud));
}

GaussianCloud read_scene(const fs::path& path) {
    return scene_from_json(read_json_file(path), path.string());
}

void write_text_file(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error("failed to write " + path.string());
    }
}

std::string read_text_file(const fs::path& path) {
    return read_all(path);
}

namespace {

// Reads the whitespace-separated header tokens of a netpbm-style file.
struct HeaderReader {
    const std::string& bytes;
    std::size_t pos = 0;
    std::string source;

    std::string token() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        if (start == pos) {
            throw ValidationError(source + ": truncated header");
        }
        return bytes.substr(start, pos - start);
    }

    int positive_int() {
        const std::string t = token();
        try {
            std::size_t used = 0;
            const int v = std::stoi(t, &used);
            if (used == t.size() && v > 0) {
                return v;
            }
        } catch (const std::exception&) {
        }
        throw ValidationError(source + ": bad header value '" + t + "'");
    }

    // Exactly one whitespace byte separates the header from the payload.
    void end_header() {
        if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            throw ValidationError(source + ": truncated header");
        }
        ++pos;
    }
};

} // namespace

void write_ppm(const fs::path& path, const Image& img) {
    if (img.channels() != 3) {
        throw ValidationError("write_ppm: image must have 3 channels");
    }
    std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                      "\n255\n";
    for (double v : img.data()) {
        const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    write_text_file(path, out);
}

Image read_ppm(const fs::path& path) {
    const std::string bytes = read_all(path);
    HeaderReader h{bytes, 0, path.string()};
    if (h.token() != "P6") {
        throw ValidationError(path.string() + ": not a binary PPM (P6)");
    }
    const int w = h.positive_int();
    const int ht = h.positive_int();
    if (h.positive_int() != 255) {
        throw ValidationError(path.string() + ": only maxval 255 is supported");
    }
    h.end_header();
    const std::size_t need = static_cast<std::size_t>(w) * ht * 3;
    if (bytes.size() - h.pos < need) {
        throw ValidationError(path.string() + ": truncated pixel data");
    }
    Image img(w, ht, 3);
    for (std::size_t i = 0; i < need; ++i) {
        img.data()[i] = static_cast<unsigned char>(bytes[h.pos + i]) / 255.0;
    }
    return img;
}

void write_pfm(const fs::path& path, const Image& img) {
    if (img.channels() != 3 && img.channels() != 1) {
        throw ValidationError("write_pfm: image must have 1 or 3 channels");
    }
    std::string out = (img.channels() == 3 ? "PF\n" : "Pf\n") + std::to_string(img.width()) + " " +
                      std::to_string(img.height()) + "\n-1.0\n";
    const std::size_t row = static_cast<std::size_t>(img.width()) * img.channels();
    for (int y = img.height() - 1; y >= 0; --y) {
        for (std::size_t i = 0; i < row; ++i) {
            const float f = static_cast<float>(img.data()[y * row + i]);
            std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
            for (int b = 0; b < 4; ++b) {
                out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
            }
        }
    }
    write_text_file(path, out);
}

Image read_pfm(const fs::path& path) {
    const std::string bytes = read_all(path);
    HeaderReader h{bytes, 0, path.string()};
    const std::string magic = h.token();
    if (magic != "PF" && magic != "Pf") {
        throw ValidationError(path.string() + ": not a PFM file");
    }
    const int channels = magic == "PF" ? 3 : 1;
    const int w = h.positive_int();
    const int ht = h.positive_int();
    const std::string scale_tok = h.token();
    double scale = 0.0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        throw ValidationError(path.string() + ": bad scale '" + scale_tok + "'");
    }
    if (scale >= 0.0) {
        throw ValidationError(path.string() + ": big-endian PFM is not supported");
    }
    h.end_header();
    const std::size_t row = static_cast<std::size_t>(w) * channels;
    const std::size_t need = row * ht * 4;
    if (bytes.size() - h.pos < need) {
        throw ValidationError(path.string() + ": truncated pixel data");
    }
    Image img(w, ht, channels);
    std::size_t p = h.pos;
    for (int y = ht - 1; y >= 0; --y) {
        for (std::size_t i = 0; i < row; ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[p++])) << (8 * b);
            }
            img.data()[y * row + i] = std::bit_cast<float>(bits);
        }
    }
    return img;
}

void write_image(const fs::path& path, const Image& img) {
    const auto ext = path.extension().string();
    if (ext == ".ppm") {
        write_ppm(path, img);
    } else if (ext == ".pfm") {
        write_pfm(path, img);
    } else {
        throw ValidationError("unsupported image extension '" + ext + "' (use .ppm or .pfm)");
    }
}

Image read_image(const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".ppm") {
        return read_ppm(path);
    }
    if (ext == ".pfm") {
        return read_pfm(path);
    }
    throw ValidationError("unsupported image extension '" + ext + "' (use .ppm or .pfm)");
}

Image round_to_float(const Image& img) {
    Image out = img;
    for (double& v : out.data()) {
        v = static_cast<float>(v);
    }
    return out;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw ValidationError(dir.string() + ": not a directory");
    }
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".ppm" || ext == ".pfm")) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return out;
}

} // namespace vgd
