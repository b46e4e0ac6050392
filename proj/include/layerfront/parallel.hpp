#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace layerfront {

/// Worker count: LAYERFRONT_THREADS if set (>=1), else hardware concurrency.
inline int worker_count() {
    if (const char* env = std::getenv("LAYERFRONT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

/// Runs fn(block, worker) for block = 0..n_blocks-1 across up to max_workers
/// threads (the calling thread acts as worker 0). Blocks are claimed
/// dynamically; each worker index is used by exactly one thread at a time, so
/// callers may keep per-worker scratch state. Callers needing results that do
/// not depend on the worker count must keep per-block outputs and merge them
/// in block order afterwards.
inline void parallel_for_blocks_indexed(int n_blocks, int max_workers,
                                        const std::function<void(int, int)>& fn) {
    const int workers = std::max(1, std::min({worker_count(), max_workers, n_blocks}));
    if (workers <= 1) {
        for (int b = 0; b < n_blocks; ++b) fn(b, 0);
        return;
    }
    std::atomic<int> next{0};
    auto drain = [&](int w) {
        for (;;) {
            int b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_blocks) break;
            fn(b, w);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(drain, w);
    drain(0);
    for (auto& th : pool) th.join();
}

inline void parallel_for_blocks(int n_blocks, const std::function<void(int)>& fn) {
    parallel_for_blocks_indexed(n_blocks, worker_count(), [&](int b, int) { fn(b); });
}

} // namespace layerfront
