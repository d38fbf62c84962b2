#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace dcrm {

/// Deterministic parallel sum of f(0..n-1). Work is split into fixed-size
/// blocks; block partial sums are combined in block order, so the result does
/// not depend on the thread count.
inline double parallel_sum(std::size_t n, int threads,
                           const std::function<double(std::size_t)>& f,
                           std::size_t block_size = 64) {
    if (n == 0) return 0.0;
    if (threads < 1) threads = 1;
    std::size_t n_blocks = (n + block_size - 1) / block_size;
    std::vector<double> block_sums(n_blocks, 0.0);

    auto run_block = [&](std::size_t b) {
        std::size_t lo = b * block_size;
        std::size_t hi = std::min(n, lo + block_size);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += f(i);
        block_sums[b] = acc;
    };

    if (threads == 1 || n_blocks == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
                    run_block(b);
            });
        for (auto& th : pool) th.join();
    }

    double total = 0.0;
    for (double s : block_sums) total += s;
    return total;
}

/// Parallel for over [0, n) with the same block scheme; side effects must be
/// index-local.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& f,
                         std::size_t block_size = 16) {
    if (n == 0) return;
    if (threads < 1) threads = 1;
    std::size_t n_blocks = (n + block_size - 1) / block_size;
    auto run_block = [&](std::size_t b) {
        std::size_t lo = b * block_size;
        std::size_t hi = std::min(n, lo + block_size);
        for (std::size_t i = lo; i < hi; ++i) f(i);
    };
    if (threads == 1 || n_blocks == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
                run_block(b);
        });
    for (auto& th : pool) th.join();
}

} // namespace dcrm
