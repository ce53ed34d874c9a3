#pragma once

#include <cstddef>
#include <functional>

namespace bayesbreak {

// Worker count: BAYESBREAK_THREADS if set and positive, otherwise the
// hardware concurrency.
std::size_t worker_count();

// Calls body(i) for i in [0, count), strided across workers. Exceptions
// thrown by the body are rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace bayesbreak
