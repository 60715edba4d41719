#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bgkit {

/// Shortest-faithful decimal: %.17g round-trips every double exactly.
inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Thrown when a field develops NaNs or negative values during stepping.
struct NumericalAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(std::span<const double> v, const std::string& what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(what + ": non-finite input");
}

inline void require_finite(double x, const std::string& what) {
    if (!std::isfinite(x)) throw std::invalid_argument(what + ": non-finite input");
}

// Pairwise summation over [lo, hi). Fixed association independent of how the
// caller partitions work, so reductions stay bit-identical across thread counts.
template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, F&& term) {
    const std::size_t n = hi - lo;
    if (n <= 64) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

inline double pairwise_sum(std::span<const double> v) {
    return pairwise_sum(std::size_t{0}, v.size(), [&](std::size_t i) { return v[i]; });
}

// Runs fn(lo, hi) on contiguous chunks of [0, n). The chunk boundaries depend
// only on n and n_threads is free to differ between runs: chunks never overlap
// and each index is written by exactly one worker, so results do not depend on
// the partition.
inline void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (n_threads <= 1 || n < 2) {
        fn(0, n);
        return;
    }
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
    std::vector<std::thread> workers;
    workers.reserve(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& w : workers) w.join();
}

}  // namespace bgkit
