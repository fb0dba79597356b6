#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace fbflow {

/// Number of worker threads used by cell loops. 1 means run inline.
///
/// Reductions are always split into fixed-size blocks whose partial sums are
/// combined in block order, so results do not depend on the worker count.
struct Workers {
    unsigned count = 1;

    static Workers all_cores() {
        return Workers{std::max(1u, std::thread::hardware_concurrency())};
    }
};

namespace detail {
inline constexpr std::size_t kBlock = 2048;
}

/// Runs body(begin, end) over [0, n) in blocks, possibly on several threads.
template <class Body>
void parallel_blocks(std::size_t n, Workers workers, Body&& body) {
    const std::size_t nblocks = (n + detail::kBlock - 1) / detail::kBlock;
    auto run_block = [&](std::size_t b) {
        const std::size_t lo = b * detail::kBlock;
        body(lo, std::min(n, lo + detail::kBlock));
    };
    if (workers.count <= 1 || nblocks <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) run_block(b);
        return;
    }
    const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(workers.count, nblocks));
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t b = t; b < nblocks; b += nthreads) run_block(b);
        });
    }
}

/// Deterministic sum of term(k) for k in [0, n).
template <class Term>
double parallel_sum(std::size_t n, Workers workers, Term&& term) {
    const std::size_t nblocks = (n + detail::kBlock - 1) / detail::kBlock;
    std::vector<double> partial(nblocks, 0.0);
    parallel_blocks(n, workers, [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += term(k);
        partial[lo / detail::kBlock] = s;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

} // namespace fbflow
