#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace atv {

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{1};
    return cap;
}
}  // namespace detail

/// Caps the number of workers used by per-point loops. 1 selects the serial path.
inline void set_max_threads(unsigned n) { detail::thread_cap().store(std::max(1u, n)); }
inline unsigned max_threads() { return detail::thread_cap().load(); }

/// Runs fn(i) for i in [0, n). Every index is written by exactly one worker and
/// no reductions happen here, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 256) {
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(max_threads(), (n + grain - 1) / std::max<std::size_t>(grain, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace atv
