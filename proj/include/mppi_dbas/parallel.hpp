#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mppi_dbas
{

/// Runs fn(i) for i in [0, count) on up to `workers` threads, in contiguous chunks.
/// fn must only write to per-index outputs; results are then independent of `workers`.
/// The first exception thrown by any chunk is rethrown on the calling thread.
template<typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn && fn)
{
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto chunk = [&](std::size_t begin, std::size_t end) {
      try {
        for (std::size_t i = begin; i < end; ++i) {
          fn(i);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    };

  const std::size_t per_worker = (count + workers - 1) / workers;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
      const std::size_t begin = std::min(count, w * per_worker);
      const std::size_t end = std::min(count, begin + per_worker);
      threads.emplace_back(chunk, begin, end);
    }
    chunk(0, std::min(count, per_worker));
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace mppi_dbas
