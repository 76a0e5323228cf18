#pragma once

#include "switchavg/core.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace switchavg {

/// Runs body(k) for k in [0, n) on worker_threads() threads. Work is handed out
/// by index, so results written per index are independent of the thread count.
/// The first exception (lowest index) is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const unsigned threads = std::min<std::size_t>(worker_threads(), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_index = n;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n) return;
            try {
                body(k);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (k < error_index) {
                    error_index = k;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace switchavg
