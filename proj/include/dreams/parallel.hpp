#ifndef DREAMS_PARALLEL_HPP
#define DREAMS_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace dreams {

/// Worker cap for row-parallel loops. 0 restores the default (DREAMS_THREADS or 1).
void set_num_threads(std::size_t threads);
std::size_t num_threads();

/**
 * Calls fn(i) for i in [begin, end) over contiguous blocks, one block per worker.
 *
 * Callers must only write state owned by index i; reductions happen afterwards
 * in index order, which keeps results independent of the worker count.
 */
template <typename Fn>
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, Fn&& fn) {
    const std::ptrdiff_t total = end - begin;
    if (total <= 0)
        return;
    const std::ptrdiff_t workers =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(num_threads()), total);
    if (workers <= 1 || total < 64) {
        for (std::ptrdiff_t i = begin; i < end; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    pool.reserve(static_cast<std::size_t>(workers));
    const std::ptrdiff_t chunk = (total + workers - 1) / workers;
    for (std::ptrdiff_t w = 0; w < workers; ++w) {
        const std::ptrdiff_t lo = begin + w * chunk;
        const std::ptrdiff_t hi = std::min(end, lo + chunk);
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (std::ptrdiff_t i = lo; i < hi; ++i)
                    fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace dreams

#endif // DREAMS_PARALLEL_HPP
