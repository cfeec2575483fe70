#pragma once

#include <cstddef>
#include <functional>

namespace openset {

/// Process-wide worker count used by parallel_for. 0 means "auto"
/// (hardware concurrency). Results never depend on this value.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks; the
/// body must only write to slots owned by its index. The first exception
/// thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace openset
