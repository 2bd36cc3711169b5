#pragma once

#include <cstddef>
#include <functional>

namespace titan {

/// Runs body(0..count-1) on up to thread_budget() threads. Each index runs exactly
/// once; the first exception (by index) is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace titan
