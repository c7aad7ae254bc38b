// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vgd {

int default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int resolve_threads(int threads, std::size_t count) {
    int n = threads <= 0 ? default_thread_count() : threads;
    if (count < static_cast<std::size_t>(n)) {
        n = static_cast<int>(std::max<std::size_t>(count, 1));
    }
    return n;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, int)>& fn) {
    if (count == 0) {
        return;
    }
    const int workers = resolve_threads(threads, count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i, 0);
        }
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += workers) {
                        fn(i, w);
                    }
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace vgd
