// Deterministic data parallelism: each index writes only its own output
// slot, so results are identical at any thread count.
#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "shdebias/error.hpp"

namespace shdebias {

// Runs fn(i) for i in [0, n) across up to `threads` workers on contiguous
// index blocks.  fn must confine writes to per-index slots; the first
// exception thrown by any worker is rethrown after all workers join.
template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
    if (threads < 1) throw PreconditionError("parallel_for: thread count must be >= 1");
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), n == 0 ? 1 : n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace shdebias
