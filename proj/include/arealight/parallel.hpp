#pragma once

#include <functional>

namespace arealight {

/// Worker count used by parallel_for. 0 = use hardware concurrency.
/// Initialized once from the AREALIGHT_THREADS environment variable.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [begin, end), split into contiguous chunks across
/// workers. Each index is processed exactly once and workers write only
/// to their own indices, so results are independent of the thread count.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

} // namespace arealight
