#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cdr {

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on up to
/// `threads` workers. Callers must write results by index so the outcome does
/// not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
}

}  // namespace cdr
