#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cleanet {

/// Process-wide worker cap for the embarrassingly parallel loops (kNN
/// scoring). Defaults to 1; the CLI raises it via --threads.
inline unsigned& max_threads() {
    static unsigned value = 1;
    return value;
}

inline void set_max_threads(unsigned n) { max_threads() = n == 0 ? 1 : n; }

/// Block-partitioned parallel loop. Each index writes only its own output
/// slot, so results are identical for any thread count.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(max_threads(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &body] {
            for (std::size_t i = begin; i < end; ++i) body(i);
        });
    }
    for (std::thread& th : pool) th.join();
}

} // namespace cleanet
