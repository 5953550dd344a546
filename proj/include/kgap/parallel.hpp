#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

namespace kgap {

// Applies `fn` to every element of `in` on up to `threads` workers and
// returns the results in input order. Output is independent of the thread
// count as long as `fn` is pure. If any call throws, the exception from the
// lowest input index is rethrown on the calling thread.
template <typename T, typename Fn>
auto parallel_map(std::span<const T> in, Fn fn, std::size_t threads = 1)
    -> std::vector<std::invoke_result_t<Fn&, const T&>> {
  using R = std::invoke_result_t<Fn&, const T&>;
  std::vector<R> out(in.size());
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(in.size(), 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = fn(in[i]);
    return out;
  }

  std::exception_ptr error;
  std::size_t error_index = in.size();
  std::mutex error_mu;
  std::vector<std::thread> pool;
  const std::size_t chunk = (in.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(in.size(), lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      std::size_t i = lo;
      try {
        for (; i < hi; ++i) out[i] = fn(in[i]);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

template <typename T, typename Fn>
auto parallel_map(const std::vector<T>& in, Fn fn, std::size_t threads = 1) {
  return parallel_map(std::span<const T>(in), std::move(fn), threads);
}

// Sum with pairwise (cascade) reduction; deterministic for a fixed input
// order and more accurate than a running sum.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  auto mid = xs.size() / 2;
  return pairwise_sum(xs.first(mid)) + pairwise_sum(xs.subspan(mid));
}

}  // namespace kgap
