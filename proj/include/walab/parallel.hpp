#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace walab {

// Runs fn(0..n_tasks-1) on up to `workers` threads. Tasks are claimed from a
// shared counter; callers that need deterministic output must write results
// into per-index slots (scheduling order is not deterministic, slot layout is).
// The first exception thrown by any task is rethrown after all threads join.
inline void parallel_for(std::size_t n_tasks, int workers, const std::function<void(std::size_t)>& fn) {
    if (n_tasks == 0) return;
    const std::size_t n_threads =
        workers <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(workers), n_tasks);
    if (n_threads == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n_tasks || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace walab
