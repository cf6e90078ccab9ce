#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

namespace cmm {

/// Data-parallel loop over [0, n). Exceptions thrown by `body` are captured and
/// the first one is rethrown on the calling thread after the loop finishes.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < count; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Deterministic reduction: rows are reduced in parallel, then combined
/// serially in row order so the result does not depend on the thread count.
template <class RowFn, class Combine, class T>
T ordered_reduce(std::size_t rows, T init, RowFn&& row_value, Combine&& combine) {
  std::vector<T> partial(rows, init);
  parallel_for(rows, [&](std::size_t r) { partial[r] = row_value(r); });
  T acc = init;
  for (const auto& p : partial) acc = combine(acc, p);
  return acc;
}

}  // namespace cmm
