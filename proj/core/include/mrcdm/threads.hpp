#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mrcdm {

/// Parallelism cap: MRCDM_THREADS when set, otherwise the hardware count.
inline int thread_budget() {
    if (const char* env = std::getenv("MRCDM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs f(i) for i in [0, n) on up to thread_budget() threads with a static
/// partition. Results must be written to disjoint slots; any aggregation
/// happens after the call, in index order, so outcomes do not depend on the
/// thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const int budget = thread_budget();
    if (budget <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(budget), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < n; i += workers) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace mrcdm
