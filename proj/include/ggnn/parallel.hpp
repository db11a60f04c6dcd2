#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ggnn {

/// Worker count: `requested` if non-zero, otherwise the GGNN_THREADS environment
/// variable, otherwise hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Runs fn(i, worker) for i in [begin, end) on `threads` workers with dynamic
/// chunked scheduling. threads <= 1 runs inline, in order. The first exception
/// thrown by any worker is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, Fn&& fn, std::size_t chunk = 16) {
    if (end <= begin) return;
    const std::size_t total = end - begin;
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1u), (total + chunk - 1) / chunk));
    if (threads <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i, 0u);
        return;
    }
    std::atomic<std::size_t> next{begin};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&](unsigned worker) {
        try {
            for (;;) {
                const std::size_t start = next.fetch_add(chunk);
                if (start >= end) break;
                const std::size_t stop = std::min(end, start + chunk);
                for (std::size_t i = start; i < stop; ++i) fn(i, worker);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(end);
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (unsigned w = 1; w < threads; ++w) pool.emplace_back(work, w);
    work(0);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace ggnn
