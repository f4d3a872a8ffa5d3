#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sixway {

/// Worker count: SIXWAY_THREADS if set, otherwise the hardware concurrency.
inline unsigned default_thread_count() {
    if (const char* env = std::getenv("SIXWAY_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) over `threads` workers using a static
/// interleaved partition. Each index is processed by exactly one worker, so
/// any body that writes only to slot i yields schedule-independent output.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, unsigned threads = default_thread_count()) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += threads) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace sixway
