#include "statact/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace statact {

namespace {
std::atomic<int> g_max_threads{0};
}

int max_threads() {
  int n = g_max_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

void set_max_threads(int n) { g_max_threads.store(n); }

void parallel_chunks(std::size_t total,
                     const std::function<void(std::size_t)>& chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (total == 0) {
    chunks(0);
    return;
  }
  std::size_t want = static_cast<std::size_t>(max_threads());
  // No point spinning up threads for tiny ranges.
  std::size_t k = std::min<std::size_t>(want, (total + 1023) / 1024);
  k = std::max<std::size_t>(k, 1);
  chunks(k);
  if (k == 1) {
    fn(0, 0, total);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(k);
  std::size_t base = total / k, rem = total % k, begin = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t len = base + (i < rem ? 1 : 0);
    pool.emplace_back(fn, i, begin, begin + len);
    begin += len;
  }
  for (auto& t : pool) t.join();
}

}
