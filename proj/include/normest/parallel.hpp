#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace normest {

// Resolve a worker count: explicit request > NORMEST_WORKERS env > hardware.
inline unsigned resolve_workers(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NORMEST_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Run fn(i) for i in [0, count) on `workers` threads. Tasks claim indices
// from a shared counter; each task must write only to its own output slot,
// which keeps results independent of scheduling. Exceptions are captured and
// rethrown on the calling thread (first one wins).
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    if (count == 0) return;
    workers = resolve_workers(workers);
    if (workers <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    if (workers > count) workers = static_cast<unsigned>(count);

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();

    if (first_error) std::rethrow_exception(first_error);
}

} // namespace normest
