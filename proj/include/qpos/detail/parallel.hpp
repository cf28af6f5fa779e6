#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qpos::detail {

inline thread_local bool in_parallel_region = false;

// QPOS_THREADS overrides the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("QPOS_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) return static_cast<unsigned>(requested);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count). Each index must only write state owned by
// that index; reductions happen afterwards in index order. Nested calls run
// serially on the calling thread.
template <class Body>
void parallel_for(std::size_t count, Body&& body, std::size_t min_chunk = 2048) {
  const unsigned workers = worker_count();
  if (in_parallel_region || workers <= 1 || count < 2 * min_chunk) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, count / min_chunk);
  const std::size_t per_chunk = (count + chunks - 1) / chunks;

  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = c * per_chunk;
      const std::size_t end = std::min(count, begin + per_chunk);
      threads.emplace_back([&, begin, end] {
        in_parallel_region = true;
        try {
          for (std::size_t i = begin; i < end; ++i) body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
        in_parallel_region = false;
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace qpos::detail
