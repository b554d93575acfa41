// Deterministic work partitioning. Work is split into fixed-size chunks whose
// boundaries never depend on the worker count; workers race only over which
// chunk they grab, and every chunk writes to its own output slots. Reductions
// over chunk results must be done sequentially by chunk index by the caller.
#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace aft {

inline int hardware_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(begin, end) over [0, n) in chunks of chunk_size. fn must only touch
// state owned by its index range.
inline void parallel_for_chunks(int64_t n, int64_t chunk_size, int workers,
                                const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    if (chunk_size <= 0) chunk_size = 1;
    const int64_t n_chunks = (n + chunk_size - 1) / chunk_size;
    if (workers <= 0) workers = hardware_workers();
    if (workers == 1 || n_chunks == 1) {
        for (int64_t c = 0; c < n_chunks; ++c) {
            const int64_t b = c * chunk_size;
            fn(b, std::min(n, b + chunk_size));
        }
        return;
    }
    std::atomic<int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const int64_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks) return;
            const int64_t b = c * chunk_size;
            try {
                fn(b, std::min(n, b + chunk_size));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<int64_t>(workers, n_chunks));
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace aft
