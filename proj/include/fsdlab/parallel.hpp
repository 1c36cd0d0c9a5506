#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace fsdlab {

// Number of worker threads: FSDLAB_THREADS env override, else hardware.
inline unsigned worker_threads() {
    if (const char* env = std::getenv("FSDLAB_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n). Work is striped across threads; callers own
// determinism by writing to disjoint, index-addressed slots. Any exception
// from a worker is rethrown on the calling thread.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn,
                         unsigned threads = 0) {
    if (threads == 0) threads = worker_threads();
    if (threads > n) threads = static_cast<unsigned>(n);
    if (threads <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

} // namespace fsdlab
