// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace vgd {

/// Number of workers used when a caller passes threads <= 0.
int default_thread_count();

/// Runs fn(index, worker) for index in [0, count). Indices are assigned to
/// workers round-robin (index % workers), so the index->worker mapping depends
/// only on the worker count. threads <= 0 selects default_thread_count().
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t index, int worker)>& fn);

/// Worker count parallel_for will actually use for the given request.
int resolve_threads(int threads, std::size_t count);

} // namespace vgd
