#pragma once

// Deterministic index-parallel loop: work item i always computes the same
// result into slot i, so thread count never changes any output.

#include <algorithm>
#include <thread>
#include <vector>

namespace vitalcast {

template <typename Fn>
void parallel_for_index(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&fn, w, n, n_threads] {
            for (std::size_t i = static_cast<std::size_t>(w); i < n;
                 i += static_cast<std::size_t>(n_threads))
                fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace vitalcast
