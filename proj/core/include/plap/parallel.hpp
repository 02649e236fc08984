#pragma once

#include <cstddef>
#include <functional>

namespace plap {

/// Upper bound on worker threads used by the library (0 = hardware concurrency).
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Calls body(i) for i in [0, n) on up to thread_count() workers. Items are
/// handed out dynamically; results must be written to per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Per-member seed derived from a base seed (splitmix64 of base and index).
unsigned long long derive_seed(unsigned long long base, unsigned long long index);

} // namespace plap
