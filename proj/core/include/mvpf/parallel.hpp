#pragma once

#include <cstddef>
#include <functional>

namespace mvpf {

// Worker cap for parallel_for. 0 = hardware concurrency. Reads the
// MVPF_THREADS environment variable the first time it is needed; an explicit
// set_thread_count overrides it.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Iterations must be independent: each index is
// processed by exactly one worker, so results are bit-identical for any
// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Deterministic sum: fixed-shape pairwise reduction, independent of thread
// count and call site.
double pairwise_sum(const double* data, std::size_t n);

}  // namespace mvpf
