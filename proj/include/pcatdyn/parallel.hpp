#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pcatdyn::par {

inline int& thread_count_ref() {
    static int n = int(std::max(1u, std::thread::hardware_concurrency()));
    return n;
}
inline void set_threads(int n) { thread_count_ref() = std::max(1, n); }
inline int threads() { return thread_count_ref(); }

// Runs fn(begin, end) over disjoint chunks of [0, n). Callers must write only
// to chunk-local outputs; reductions stay sequential so results do not depend
// on the thread count.
template <class Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    const int t = std::min<std::size_t>(threads(), n ? n : 1);
    if (t <= 1 || n < 2048) {
        fn(std::size_t(0), n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    const std::size_t chunk = (n + t - 1) / t;
    for (int w = 0; w < t; ++w) {
        const std::size_t b = std::min(n, std::size_t(w) * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_chunks(n, [&fn](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) fn(i);
    });
}

}  // namespace pcatdyn::par
