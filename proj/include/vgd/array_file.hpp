// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vgd {

/// Named-array container (".vgda"), all integers and floats little-endian:
///
///   magic    8 bytes  "VGDARR01"
///   count    u64      number of arrays
///   repeated count times, in ascending name order:
///     name_len u32, name bytes (UTF-8, no terminator)
///     ndim     u32, dims u64[ndim]
///     data     f64[prod(dims)], row-major
///
/// Arrays are written sorted by name, so equal contents give equal bytes.
struct NamedArray {
    std::vector<std::uint64_t> shape;
    std::vector<double> data;

    std::uint64_t element_count() const;
};

using ArrayStore = std::map<std::string, NamedArray>;

void write_arrays(const std::filesystem::path& path, const ArrayStore& arrays);
ArrayStore read_arrays(const std::filesystem::path& path);

/// Fetches an array and checks its shape; throws ValidationError naming the file and field.
const NamedArray& require_array(const ArrayStore& arrays, const std::string& name,
                                const std::vector<std::uint64_t>& shape);

} // namespace vgd
