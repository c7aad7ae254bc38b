// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/array_file.hpp"

#include "vgd/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

namespace vgd {

namespace {

constexpr char kMagic[8] = {'V', 'G', 'D', 'A', 'R', 'R', '0', '1'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

template <typename T>
void put(std::ofstream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes, bytes + sizeof(T));
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw ValidationError(path.string() + ": truncated array file");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes, bytes + sizeof(T));
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

std::uint64_t NamedArray::element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::uint64_t{1},
                           std::multiplies<std::uint64_t>());
}

void write_arrays(const std::filesystem::path& path, const ArrayStore& arrays) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(kMagic, sizeof(kMagic));
    put<std::uint64_t>(out, arrays.size());
    for (const auto& [name, array] : arrays) {
        if (array.element_count() != array.data.size()) {
            throw ValidationError("write_arrays: array '" + name + "' shape does not match data");
        }
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(array.shape.size()));
        for (auto d : array.shape) {
            put<std::uint64_t>(out, d);
        }
        for (double v : array.data) {
            put<double>(out, v);
        }
    }
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

ArrayStore read_arrays(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ValidationError(path.string() + ": not a VGDARR01 array file");
    }
    const auto count = get<std::uint64_t>(in, path);
    ArrayStore arrays;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint32_t>(in, path);
        if (name_len > 4096) {
            throw ValidationError(path.string() + ": array name too long");
        }
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) {
            throw ValidationError(path.string() + ": truncated array name");
        }
        NamedArray array;
        const auto ndim = get<std::uint32_t>(in, path);
        if (ndim > 16) {
            throw ValidationError(path.string() + ": array '" + name + "' has too many dimensions");
        }
        for (std::uint32_t d = 0; d < ndim; ++d) {
            array.shape.push_back(get<std::uint64_t>(in, path));
        }
        const auto n = array.element_count();
        if (n > kMaxElements) {
            throw ValidationError(path.string() + ": array '" + name + "' is implausibly large");
        }
        array.data.resize(n);
        for (auto& v : array.data) {
            v = get<double>(in, path);
        }
        arrays.emplace(std::move(name), std::move(array));
    }
    return arrays;
}

const NamedArray& require_array(const ArrayStore& arrays, const std::string& name,
                                const std::vector<std::uint64_t>& shape) {
    auto it = arrays.find(name);
    if (it == arrays.end()) {
        throw ValidationError("missing array '" + name + "'");
    }
    if (it->second.shape != shape) {
        throw ValidationError("array '" + name + "' has an unexpected shape");
    }
    return it->second;
}

} // namespace vgd
