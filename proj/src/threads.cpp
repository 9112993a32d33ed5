#include "torsonet/threads.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>

namespace torsonet {

int worker_count() {
  int limit = 0;
  if (const char* env = std::getenv("TORSONET_THREADS")) {
    limit = std::atoi(env);
    if (limit < 0) limit = 0;
  }
  if (limit == 0) {
    limit = static_cast<int>(std::thread::hardware_concurrency());
    if (limit < 1) limit = 1;
  }
  return limit;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace torsonet
