#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace acrobin {

inline std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> n{std::max(1u, std::thread::hardware_concurrency())};
    return n;
}

inline unsigned threads() { return thread_setting().load(); }
inline void set_threads(unsigned n) { thread_setting() = std::max(1u, n); }

/// Calls fn(lo, hi) on contiguous chunks of [begin, end). Chunks write
/// disjoint outputs, so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, std::size_t min_chunk = 16) {
    if (end <= begin) return;
    const std::size_t n = end - begin;
    const std::size_t workers = std::min<std::size_t>(threads(), std::max<std::size_t>(1, n / min_chunk));
    if (workers <= 1) {
        fn(begin, end);
        return;
    }
    std::exception_ptr error;
    std::mutex guard;
    auto run = [&](std::size_t lo, std::size_t hi) {
        try {
            fn(lo, hi);
        } catch (...) {
            std::lock_guard lock(guard);
            if (!error) error = std::current_exception();
        }
    };
    const std::size_t chunk = (n + workers - 1) / workers;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            const std::size_t lo = begin + w * chunk, hi = std::min(end, lo + chunk);
            if (lo < hi) pool.emplace_back(run, lo, hi);
        }
        run(begin, std::min(end, begin + chunk));
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace acrobin
