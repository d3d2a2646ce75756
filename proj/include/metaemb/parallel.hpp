// Blocked parallel_for over an index range. Work items write to disjoint
// slots, so results do not depend on the thread count.
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace metaemb {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
    const std::size_t total = end > begin ? end - begin : 0;
    if (total == 0) return;
    int t = resolve_threads(threads);
    if (t <= 1 || total == 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    t = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(t), total));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(t));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (total + static_cast<std::size_t>(t) - 1) / static_cast<std::size_t>(t);
    for (int w = 0; w < t; ++w) {
        const std::size_t lo = begin + static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : workers) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace metaemb
