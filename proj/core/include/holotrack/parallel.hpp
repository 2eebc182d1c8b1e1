#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace holotrack {

/// Runs body(index, worker) for index in [0, n) on up to `workers` threads.
/// Indices are handed out dynamically; callers must write results into
/// per-index slots so output does not depend on scheduling. The first
/// exception thrown by any body is rethrown after all threads join.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
    const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
    if (n_threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i, std::size_t{0});
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&](std::size_t worker) {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i, worker);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t spawn = std::min(n_threads, n);
    pool.reserve(spawn - 1);
    for (std::size_t w = 1; w < spawn; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace holotrack
