#pragma once

#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

// Error taxonomy: contract violations by the caller -> std::invalid_argument
// (CLI maps these to exit code 2); numerical failures detected mid-run ->
// std::runtime_error (exit code 1). Both carry a human-readable diagnostic.
#define LCSLAB_REQUIRE(cond, msg)                                        \
  do {                                                                   \
    if (!(cond)) throw std::invalid_argument(std::string("lcslab: ") + (msg)); \
  } while (0)

#define LCSLAB_CHECK_NUMERIC(cond, msg)                                  \
  do {                                                                   \
    if (!(cond)) throw std::runtime_error(std::string("lcslab: ") + (msg)); \
  } while (0)

namespace lcslab {

inline constexpr double kPi = 3.14159265358979323846;

inline std::int64_t env_int(const char* name, std::int64_t fallback) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  long long parsed = std::strtoll(v, &end, 10);
  if (end == v) return fallback;
  return static_cast<std::int64_t>(parsed);
}

inline std::uint64_t default_seed() {
  return static_cast<std::uint64_t>(env_int("LCSLAB_SEED", 20260816));
}

inline int thread_count() {
  std::int64_t n = env_int("LCSLAB_THREADS", 0);
  if (n <= 0) n = static_cast<std::int64_t>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  return static_cast<int>(n);
}

// Runs f(i) for i in [0, n). Results must be written to per-index slots so the
// merge order (and therefore every float) is independent of the thread count.
template <class F>
void parallel_for(std::int64_t n, F&& f, int threads = -1) {
  if (threads < 0) threads = thread_count();
  if (threads <= 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  std::exception_ptr first_error = nullptr;
  std::mutex guard;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::int64_t i = t; i < n; i += threads) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(guard);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lcslab
