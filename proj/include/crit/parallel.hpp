#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace crit {

inline int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads. Work is handed
/// out in fixed blocks; callers write results by index so the outcome does not
/// depend on scheduling. The first exception thrown by fn is rethrown.
template <class Fn>
void parallel_for(std::int64_t count, int workers, Fn&& fn) {
    workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(resolve_workers(workers), count)));
    if (workers == 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    constexpr std::int64_t kBlock = 256;
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        try {
            for (;;) {
                const std::int64_t start = next.fetch_add(kBlock);
                if (start >= count) return;
                const std::int64_t stop = std::min(count, start + kBlock);
                for (std::int64_t i = start; i < stop; ++i) fn(i);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(count);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace crit
