#include "mvpf/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mvpf {

namespace {
int g_threads = -1;  // -1 = not initialized yet

int resolve_default() {
    if (const char* env = std::getenv("MVPF_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

void set_thread_count(int n) { g_threads = n > 0 ? n : resolve_default(); }

int thread_count() {
    if (g_threads <= 0) g_threads = resolve_default();
    return g_threads;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = thread_count();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    // Block-strided work stealing over fixed-size chunks. Every index runs
    // exactly once, so scheduling order cannot change results.
    const std::size_t chunk = 64;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::atomic<std::size_t> next{0};
    auto body = [&]() {
        std::size_t c;
        while ((c = next.fetch_add(1)) < n_chunks) {
            const std::size_t lo = c * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min<std::size_t>(workers, n_chunks) - 1;
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

}  // namespace mvpf
