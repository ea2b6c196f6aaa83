#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace didguard {

// Runs run_range(lo, hi) over [0, n) split across the given number of
// threads. The partition depends only on (n, threads), and callers derive
// per-index randomness themselves, so results never depend on scheduling.
// The first exception thrown by a worker is rethrown on the caller.
inline void parallel_for(int n, int threads, const std::function<void(int, int)>& run_range) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        run_range(0, n);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                run_range(lo, hi);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace didguard
