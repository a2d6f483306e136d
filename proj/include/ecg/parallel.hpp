#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ecg {

inline unsigned worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker. Each index is processed exactly once and writers must target
// disjoint per-index slots; any cross-index reduction happens afterwards in
// index order, which keeps results independent of the thread count.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn,
                         unsigned max_threads = 0) {
    unsigned workers = max_threads == 0 ? worker_count() : max_threads;
    workers = unsigned(std::min<size_t>(workers, n));
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        size_t lo = size_t(w) * chunk;
        size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&fn, lo, hi] {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : threads) t.join();
}

} // namespace ecg
