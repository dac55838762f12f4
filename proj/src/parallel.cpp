#include "idslab/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace idslab {

int default_workers() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(long n, int workers, const std::function<void(long)>& f) {
  if (n <= 0) return;
  if (workers <= 0) workers = default_workers();
  long k = std::min<long>(workers, n);
  if (k <= 1) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }

  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto run_block = [&](long lo, long hi) {
    try {
      for (long i = lo; i < hi; ++i) f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(k));
  long base = n / k, rem = n % k, lo = 0;
  for (long w = 0; w < k; ++w) {
    long hi = lo + base + (w < rem ? 1 : 0);
    pool.emplace_back(run_block, lo, hi);
    lo = hi;
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace idslab
