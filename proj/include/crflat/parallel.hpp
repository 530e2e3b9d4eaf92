#pragma once

// Index-parallel loops. Results are written by index, so the thread count
// never changes what is computed.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace crflat {

/// Worker count from CRFLAT_THREADS; 1 when unset or invalid.
inline int thread_hint() {
  const char* env = std::getenv("CRFLAT_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  return int(std::min<long>(v, 256));
}

/// Runs fn(i) for i in [0, count). If any call throws, the exception of the
/// lowest failing index is rethrown.
template <class Fn>
void parallel_for(int count, Fn&& fn, int threads = thread_hint()) {
  if (count <= 0) return;
  threads = std::max(1, std::min(threads, count));
  std::vector<std::exception_ptr> errors(count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace crflat
