#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace artifact {

// Thread count used by the batch helpers; 0 means hardware concurrency.
inline int& thread_count() {
  static int n = 0;
  return n;
}

inline int resolved_threads() {
  int n = thread_count();
  if (n <= 0) n = int(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

// Runs fn(i) for i in [0, n). Each index writes only its own output slot, so
// results do not depend on the schedule. The first exception is rethrown.
template <class Fn>
void parallel_for(size_t n, Fn fn, int threads = 0) {
  int T = threads > 0 ? threads : resolved_threads();
  T = int(std::min<size_t>(size_t(T), std::max<size_t>(n, 1)));
  if (T <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < T; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

template <class R, class Fn>
std::vector<R> parallel_map(size_t n, Fn fn, int threads = 0) {
  std::vector<R> out(n);
  parallel_for(n, [&](size_t i) { out[i] = fn(i); }, threads);
  return out;
}

}  // namespace artifact
