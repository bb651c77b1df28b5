#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cog {

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Work items must
/// write only to their own slots. If several items throw, the exception of
/// the lowest index is rethrown so failures do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  if (workers <= 1) {
    run(next);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back([&] { run(next); });
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cog
