#include "jdsr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jdsr {
namespace {

std::atomic<int> g_threads{0};

int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

constexpr std::size_t kMinChunk = 256;

}  // namespace

void set_thread_count(int n) { g_threads = n <= 0 ? 0 : n; }

int thread_count() {
  const int n = g_threads.load();
  return n <= 0 ? hardware_threads() : n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), (n + kMinChunk - 1) / kMinChunk);
  if (workers <= 1) {
    if (n) body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto guarded = [&](std::size_t b, std::size_t e) {
    try {
      body(b, e);
    } catch (...) {
      const std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(guarded, b, e);
    }
    guarded(0, std::min(n, chunk));
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace jdsr
