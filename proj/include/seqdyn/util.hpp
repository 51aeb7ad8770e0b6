#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <thread>
#include <utility>
#include <vector>

namespace seqdyn {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Wrap to (-pi, pi].
inline double wrap_angle(double x) {
    double y = std::fmod(x, two_pi);
    if (y <= -std::numbers::pi) y += two_pi;
    if (y > std::numbers::pi) y -= two_pi;
    return y;
}

// Least-squares line y = a + b*x.
inline std::pair<double, double> fit_line(const std::vector<double>& xs,
                                          const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    const double b = (n * sxy - sx * sy) / denom;
    const double a = (sy - b * sx) / n;
    return {a, b};
}

// SplitMix64 finalizer; the basis of all seeded randomness in the library.
// Counter-based so that draws for distinct (m, index) slots are independent
// of evaluation order and thread.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t hash_key(std::uint64_t seed, std::uint64_t m,
                              std::uint64_t index, std::uint64_t counter) {
    std::uint64_t h = seed * 0x9e3779b97f4a7c15ull;
    h += m * 0xd1342543de82ef95ull;
    h += index * 0x2545f4914f6cdd1dull;
    h += counter * 0x9e6c63d0876a9a35ull;
    return mix64(h);
}

// Uniform in [-1, 1], 53-bit resolution, bit-identical across platforms.
inline double unit_draw(std::uint64_t seed, std::uint64_t m,
                        std::uint64_t index, std::uint64_t counter) {
    const std::uint64_t h = hash_key(seed, m, index, counter);
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
}

// Uniform draw from the closed unit disk by rejection from the square.
inline cplx disk_draw(std::uint64_t seed, std::uint64_t m, std::uint64_t index) {
    for (std::uint64_t t = 0;; ++t) {
        const double u = unit_draw(seed, m, index, 2 * t);
        const double v = unit_draw(seed, m, index, 2 * t + 1);
        if (u * u + v * v <= 1.0) return {u, v};
    }
}

// Chunked parallel loop; results must be written to disjoint indices so the
// outcome is independent of the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic_size_t next{0};
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace seqdyn
