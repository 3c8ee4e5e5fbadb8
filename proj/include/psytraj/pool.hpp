// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace psytraj {

// Persistent worker pool for fan-out over batch rows. Work is always split
// by fixed index ranges and reduced in worker order, so results are
// deterministic for a given worker count.
class Pool {
 public:
  // workers == 0 picks the hardware concurrency; workers == 1 runs inline.
  explicit Pool(unsigned workers = 0);
  ~Pool();

  Pool(const Pool&) = delete;
  Pool& operator=(const Pool&) = delete;

  unsigned workers() const { return count_; }

  // Invokes fn(worker_index) once per worker and waits for all to finish.
  void run(const std::function<void(unsigned)>& fn);

 private:
  void worker_loop(unsigned idx);

  unsigned count_ = 1;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  const std::function<void(unsigned)>* job_ = nullptr;
  uint64_t generation_ = 0;
  unsigned remaining_ = 0;
  bool stop_ = false;
};

// Contiguous slice [begin, end) of n items for worker idx of k.
inline std::pair<std::size_t, std::size_t> split_range(std::size_t n, unsigned k, unsigned idx) {
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  const std::size_t begin = idx * base + (idx < extra ? idx : extra);
  const std::size_t len = base + (idx < extra ? 1 : 0);
  return {begin, begin + len};
}

}  // namespace psytraj
