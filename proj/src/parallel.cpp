#include "kolmo/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace kolmo {

int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("KOLMO_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }();
    return n;
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body) {
    if (n <= 0) return;
    const int64_t chunks = (n + kParallelChunk - 1) / kParallelChunk;
    const int threads = static_cast<int>(std::min<int64_t>(thread_count(), chunks));
    if (threads <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    std::atomic<int64_t> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int64_t c = next.fetch_add(1);
                if (c >= chunks) break;
                const int64_t b = c * kParallelChunk;
                const int64_t e = std::min<int64_t>(b + kParallelChunk, n);
                body(b, e);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace kolmo
