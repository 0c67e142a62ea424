#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace oneshot {

/// Runs fn(i) for i in [begin, end) on up to `workers` threads, worker w taking
/// indices begin+w, begin+w+workers, ... The first exception is rethrown.
inline void parallel_for(std::size_t begin, std::size_t end, std::size_t workers,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t n = end > begin ? end - begin : 0;
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  const std::size_t threads = workers < n ? workers : n;
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = begin + w; i < end; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace oneshot
