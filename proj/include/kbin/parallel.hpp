#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace kbin {

// Process-wide cap on worker threads, set once by the CLI (--threads).
// Every data-parallel loop in the library is written so that each output
// element is produced by exactly one serial reduction, so results are
// identical for any thread count.
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};  // 0 = hardware default
    return cap;
}

inline void set_thread_cap(unsigned n) { thread_cap().store(n); }

inline unsigned effective_threads(std::size_t work_items) {
    unsigned cap = thread_cap().load();
    if (cap == 0) {
        cap = std::max(1u, std::thread::hardware_concurrency());
    }
    return static_cast<unsigned>(std::min<std::size_t>(cap, std::max<std::size_t>(1, work_items)));
}

// Splits [0, n) into contiguous chunks, one per worker.
// fn(begin, end, chunk_index) must not touch another chunk's outputs.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    const unsigned workers = effective_threads(n);
    if (workers <= 1 || n == 0) {
        fn(std::size_t{0}, n, 0u);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t step = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(n, w * step);
        const std::size_t end = std::min(n, begin + step);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
    }
    for (auto& t : pool) t.join();
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_chunks(n, [&fn](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
    });
}

}  // namespace kbin
