#include "arealight/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace arealight {

namespace {

int initial_thread_count() {
    if (const char* env = std::getenv("AREALIGHT_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? int(hc) : 1;
}

std::atomic<int> g_threads{initial_thread_count()};

} // namespace

void set_thread_count(int n) { g_threads.store(n > 0 ? n : initial_thread_count()); }

int thread_count() { return g_threads.load(); }

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int n = end - begin;
    if (n <= 0) return;
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + int(int64_t(n) * w / workers);
        const int hi = begin + int(int64_t(n) * (w + 1) / workers);
        pool.emplace_back([lo, hi, &fn, &error, &error_mutex] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace arealight
