#include "gwgflow/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace gwg {

namespace {

int g_threads = 0;

int resolve_threads() {
    if (const char* env = std::getenv("GWGFLOW_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

} // namespace

int thread_count() {
    if (g_threads == 0) g_threads = resolve_threads();
    return g_threads;
}

void set_thread_count(int n) {
    g_threads = n >= 1 ? n : 1;
}

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (chunk_size == 0) chunk_size = kDefaultChunk;
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const int workers = thread_count();

    auto run_chunk = [&](std::size_t c) {
        const std::size_t lo = c * chunk_size;
        const std::size_t hi = lo + chunk_size < n ? lo + chunk_size : n;
        fn(c, lo, hi);
    };

    if (workers <= 1 || n_chunks <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
        return;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) break;
            run_chunk(c);
        }
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::size_t>(workers, n_chunks)) - 1;
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_chunks(n, kDefaultChunk, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
}

} // namespace gwg
