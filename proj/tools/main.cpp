// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return vgd::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
