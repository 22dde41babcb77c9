#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace rendet {

/// Default worker count: RENDET_THREADS if set to a positive integer, else 1.
inline int default_thread_count()
{
    if (const char* env = std::getenv("RENDET_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) {
                return n;
            }
        } catch (const std::exception&) {
        }
    }
    return 1;
}

/// Calls fn(i) for i in [0, n), split into contiguous chunks over `threads`
/// workers. fn must only write state owned by index i.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn)
{
    threads = std::clamp(threads, 1, std::max(1, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        const int lo = n * t / threads;
        const int hi = n * (t + 1) / threads;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) {
                fn(i);
            }
        });
    }
}

} // namespace rendet
