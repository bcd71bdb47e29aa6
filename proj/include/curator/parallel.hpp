#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace curator {

inline int resolve_workers(int workers) {
    if (workers > 0) return workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for every i in [0,n). workers <= 1 is the serial reference path;
// otherwise the loop fans out across an OpenMP team. fn must only touch
// per-index state, which keeps results identical to the serial path. An
// exception thrown by fn is captured (first one wins), the remaining
// iterations are skipped, and it is rethrown on the calling thread; OpenMP
// would terminate the process if it crossed the region boundary itself.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
    std::exception_ptr error;
    std::atomic<bool> failed{false};
#pragma omp parallel for num_threads(workers) schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace curator
