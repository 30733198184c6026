#pragma once

#include <cstddef>
#include <functional>

namespace mldp {

/// Fixed-size worker pool. Work is split into index ranges; callers write
/// results into per-index slots and reduce them in index order, so the
/// outcome never depends on the number of threads.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned threads = 1);

  unsigned threads() const { return threads_; }

  /// Calls body(begin, end) over [0, n) in chunks of `chunk` indices.
  /// The first exception thrown by any chunk is rethrown after all workers join.
  void for_ranges(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& body) const;

  /// Thread count from --threads, then MLDP_THREADS, then hardware concurrency.
  static unsigned resolve_threads(int requested);

 private:
  unsigned threads_;
};

}  // namespace mldp
