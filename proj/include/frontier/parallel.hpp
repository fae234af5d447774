#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace frontier {

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on (n, n_threads); callers must write to disjoint ranges, so
// results are identical for any thread count.
inline void parallel_for(std::size_t n, int n_threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t workers = n_threads < 1 ? 1 : static_cast<std::size_t>(n_threads);
    workers = std::min(workers, n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

} // namespace frontier
