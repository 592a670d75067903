#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace ringlab {

/// Worker count from RINGLAB_WORKERS, falling back to 1.
int workers_from_env();

/// Calls fn(begin, end) over a static partition of [0, n). Each index is
/// handled by exactly one worker; results written per index are therefore
/// independent of the worker count.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n));
    if (w <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    const std::size_t chunk = (n + w - 1) / w;
    for (std::size_t k = 0; k < w; ++k) {
        const std::size_t b = k * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace ringlab
