#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mortarms {

// Runs f(i) for i in [0, count) on up to `threads` workers with static
// contiguous partitioning.  Callers must write only to slots owned by
// iteration i; any cross-iteration reduction happens serially afterwards,
// which keeps results identical for every thread count.
template <typename F>
void parallel_for(std::size_t count, int threads, F&& f) {
    if (count == 0) return;
    std::size_t nw = threads > 1 ? std::min<std::size_t>(static_cast<std::size_t>(threads), count) : 1;
    if (nw <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::size_t chunk = (count + nw - 1) / nw;
    for (std::size_t w = 0; w < nw; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> guard(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mortarms
