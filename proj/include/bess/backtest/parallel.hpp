#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bess::backtest {

/// Worker count for a `threads` setting (0 = hardware concurrency), never more than `tasks`.
inline int worker_count(int threads, std::size_t tasks) {
  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (static_cast<std::size_t>(n) > tasks) n = static_cast<int>(std::max<std::size_t>(tasks, 1));
  return n;
}

/// Calls fn(i) for every i in [0, count) on a pool of workers. Results must be written by index;
/// the order of execution is unspecified. The exception of the lowest failing index is rethrown
/// after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = worker_count(threads, count);
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace bess::backtest
