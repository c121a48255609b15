#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace gpath::detail {

// Calls body(begin, end) over contiguous chunks of [0, total). Each index is
// processed exactly once, so per-index results do not depend on `threads`.
template <typename Body>
void parallel_for(std::size_t total, int threads, Body&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || total < 2 * workers) {
    body(std::size_t{0}, total);
    return;
  }
  const std::size_t chunk = (total + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(std::size_t{0}, std::min(total, chunk));
}

}  // namespace gpath::detail
