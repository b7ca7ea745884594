#pragma once

#include <cstddef>
#include <functional>

namespace qsense {

/// Worker count: QSENSE_THREADS if set (>=1), else hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, count). Work is distributed over thread_count()
/// workers; callers must make body(i) independent of execution order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace qsense
